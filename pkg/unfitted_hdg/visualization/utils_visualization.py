# -*- coding: utf-8 -*-
"""Static figures of solutions, degree maps and convergence tables."""
from typing import Dict, List, Optional, Sequence

import numpy as np
from numpy import ndarray

from ..cut_classification import CutTopology
from ..nurbs_geometry import NurbsCurve
from ..utils import unavailable

try:
    import matplotlib.pyplot as plt
    _has_matplotlib = True
except ImportError:
    _has_matplotlib = False


@unavailable(not _has_matplotlib, "matplotlib")
def plot_curves(curves: Sequence[NurbsCurve], ax, n_points: int = 200, **kwargs):
    """Draw every curve as a polyline of n_points samples."""
    kwargs.setdefault('color', 'k')
    kwargs.setdefault('lw', 1.)
    lam = np.linspace(0., 1., n_points)
    for curve in curves:
        points = curve.evaluate(lam)
        ax.plot(points[:, 0], points[:, 1], **kwargs)
    return ax


@unavailable(not _has_matplotlib, "matplotlib")
def plot_degree_map(topology: CutTopology, degrees: ndarray, title: Optional[str] = None):
    """Element degrees over the background grid, inactive elements left blank.

    Returns
    -------
    fig: matplotlib.figure.Figure
    """
    mesh = topology.mesh
    grid = np.full((mesh.ny, mesh.nx), np.nan)
    for e in topology.active_elements():
        i, j = mesh.element_indices(e)
        grid[j, i] = degrees[e]

    fig, ax = plt.subplots(figsize=(6, 6))
    x0, y0 = mesh.origin
    x1, y1 = x0 + mesh.extent[0], y0 + mesh.extent[1]
    image = ax.imshow(np.ma.masked_invalid(grid), origin='lower', extent=(x0, x1, y0, y1),
                      cmap='viridis', interpolation='nearest')
    fig.colorbar(image, ax=ax, label='degree')
    plot_curves(topology.curves, ax)
    ax.set_aspect('equal')
    if title is not None:
        ax.set_title(title)
    return fig


@unavailable(not _has_matplotlib, "matplotlib")
def plot_field(points: ndarray, values: ndarray, curves: Sequence[NurbsCurve] = (), title: Optional[str] = None):
    """Scatter plot of a scalar field sampled at points."""
    fig, ax = plt.subplots(figsize=(6, 6))
    sc = ax.scatter(points[:, 0], points[:, 1], c=values, s=4, cmap='coolwarm')
    fig.colorbar(sc, ax=ax)
    plot_curves(curves, ax)
    ax.set_aspect('equal')
    if title is not None:
        ax.set_title(title)
    return fig


@unavailable(not _has_matplotlib, "matplotlib")
def plot_convergence(rows: List[Dict[str, float]], quantity: str, x_key: str = 'h', group_key: str = 'degree'):
    """Log-log plot of quantity against x_key, one line per value of group_key."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for group in sorted({row[group_key] for row in rows}):
        selected = sorted((row for row in rows if row[group_key] == group and quantity in row),
                          key=lambda row: row[x_key])
        ax.loglog([row[x_key] for row in selected], [row[quantity] for row in selected], 'o-',
                  label=f'{group_key} = {group}')
    ax.set_xlabel(x_key)
    ax.set_ylabel(quantity)
    ax.grid(True, which='both', alpha=0.3)
    ax.legend()
    return fig


def close(fig) -> None:
    if _has_matplotlib:
        plt.close(fig)
