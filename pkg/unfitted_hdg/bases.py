# -*- coding: utf-8 -*-
"""Polynomial bases for the element and face unknowns.

Element unknowns use tensor Lagrange polynomials on Gauss-Lobatto nodes of the
reference square [-1, 1]^2. Face unknowns use either Legendre polynomials or
Lagrange polynomials on the Gauss-Lobatto nodes of [-1, 1]. Both nodal bases
are evaluated through the Legendre Vandermonde matrix of their nodes.
"""
import functools
import math
from typing import Tuple

import numpy as np
from numpy import ndarray
from numpy.polynomial import legendre

from .utils import ConfigError

K_MIN = 1
K_MAX = 10

FACE_BASIS_KINDS = ('legendre', 'lagrange')


def gauss_lobatto_nodes(k: int) -> ndarray:
    """The k+1 Gauss-Lobatto nodes on [-1, 1], i.e. the roots of (1-x^2)P'_k(x)."""
    if k < 1:
        raise ValueError(f'Gauss-Lobatto nodes need k >= 1, got {k}')
    interior = legendre.Legendre.basis(k).deriv().roots()
    nodes = np.concatenate(([-1.0], np.sort(np.real(interior)), [1.0]))
    return nodes


def _legendre_derivatives(x: ndarray, k: int) -> ndarray:
    """Derivatives of P_0..P_k at x, shape len(x) x (k+1)."""
    dcoef = legendre.legder(np.eye(k + 1))
    return legendre.legval(x, dcoef).T


class Lagrange1D:
    """Lagrange polynomials of degree k on Gauss-Lobatto nodes."""

    def __init__(self, k: int):
        self.degree = k
        self.nodes = gauss_lobatto_nodes(k)
        self._inv_vandermonde = np.linalg.inv(legendre.legvander(self.nodes, k))

    def values(self, x: ndarray) -> ndarray:
        """Values at x, shape len(x) x (k+1)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return legendre.legvander(x, self.degree) @ self._inv_vandermonde

    def derivatives(self, x: ndarray) -> ndarray:
        """First derivatives at x, shape len(x) x (k+1)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return _legendre_derivatives(x, self.degree) @ self._inv_vandermonde


class ElementBasis:
    """Tensor Lagrange basis on the reference square.

    The basis function with index i + (k+1) j is l_i(xi) l_j(eta).

    Attributes
    ----------
    degree: int
        Polynomial degree k in each direction.
    dimension: int
        Number of basis functions, (k+1)^2.
    nodes: N x 2 np.ndarray[float]
        Reference coordinates of the nodes.
    """

    def __init__(self, k: int):
        self.degree = k
        self.dimension = (k + 1) ** 2
        self._lagrange = Lagrange1D(k)
        xi, eta = np.meshgrid(self._lagrange.nodes, self._lagrange.nodes, indexing='xy')
        self.nodes = np.column_stack((xi.ravel(), eta.ravel()))

    def values(self, ref_points: ndarray) -> ndarray:
        """Basis values at reference points (n x 2), shape n x N."""
        lx = self._lagrange.values(ref_points[:, 0])
        ly = self._lagrange.values(ref_points[:, 1])
        return (ly[:, :, None] * lx[:, None, :]).reshape(len(ref_points), -1)

    def gradients(self, ref_points: ndarray) -> Tuple[ndarray, ndarray]:
        """Derivatives with respect to xi and eta at reference points, each n x N."""
        lx = self._lagrange.values(ref_points[:, 0])
        ly = self._lagrange.values(ref_points[:, 1])
        dlx = self._lagrange.derivatives(ref_points[:, 0])
        dly = self._lagrange.derivatives(ref_points[:, 1])
        n = len(ref_points)
        d_xi = (ly[:, :, None] * dlx[:, None, :]).reshape(n, -1)
        d_eta = (dly[:, :, None] * lx[:, None, :]).reshape(n, -1)
        return d_xi, d_eta


class FaceBasis:
    """One dimensional basis for the hybrid velocity on a face.

    Attributes
    ----------
    kind: str
        'legendre' or 'lagrange'.
    degree: int
        Polynomial degree k_f.
    dimension: int
        Number of basis functions, k_f + 1.
    """

    def __init__(self, kind: str, k: int):
        if kind not in FACE_BASIS_KINDS:
            raise ConfigError(f'Unknown value for face basis, {kind}')
        self.kind = kind
        self.degree = k
        self.dimension = k + 1
        self._lagrange = Lagrange1D(k) if kind == 'lagrange' else None

    @property
    def nodes(self) -> ndarray:
        """Nodes of the Lagrange variant (the Legendre variant has none)."""
        if self._lagrange is None:
            raise AttributeError('A Legendre face basis has no nodes')
        return self._lagrange.nodes

    def values(self, t: ndarray, t0: float = -1., t1: float = 1.) -> ndarray:
        """Values at face coordinates t in [-1, 1], shape len(t) x (k_f+1).

        The Legendre variant lives on the portion [t0, t1] of the face. It is
        orthogonal there in the face coordinate, with the norms 2 / (2i + 1)
        of the full face whatever the portion length. The Lagrange variant
        ignores the portion and keeps its nodes on the whole face.

        >>> face_basis('legendre', 2).values([1., 0.]).tolist()
        [[1.0, 1.0, 1.0], [1.0, 0.0, -0.5]]
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self._lagrange is None:
            s = (2. * t - t0 - t1) / (t1 - t0)
            return legendre.legvander(s, self.degree) * math.sqrt(2. / (t1 - t0))
        return self._lagrange.values(t)


@functools.lru_cache(maxsize=None)
def element_basis(k: int) -> ElementBasis:
    """Return the tensor Gauss-Lobatto Lagrange basis of degree k, 1 <= k <= 10.

    >>> element_basis(2).dimension
    9
    """
    if not K_MIN <= k <= K_MAX:
        raise ConfigError(f'Element degree must lie in [{K_MIN}, {K_MAX}], got {k}')
    return ElementBasis(k)


@functools.lru_cache(maxsize=None)
def postprocess_basis(k: int) -> ElementBasis:
    """Return the degree k+1 basis used by the superconvergent postprocess."""
    return ElementBasis(k + 1)


@functools.lru_cache(maxsize=None)
def face_basis(kind: str, k: int) -> FaceBasis:
    """Return the face basis of the given kind and degree."""
    if k < 1:
        raise ConfigError(f'Face degree must be at least 1, got {k}')
    return FaceBasis(kind, k)
