# -*- coding: utf-8 -*-
"""Shared helpers: the error hierarchy, shape checks and small geometry kernels."""
import functools
from typing import Tuple, Optional, Sequence

import numpy as np
from numpy import ndarray


class UnfittedHdgError(Exception):
    """Base class of all errors raised by the solver.

    Attributes
    ----------
    exit_code: int
        The process exit code the command line interface reports for this error.
    """
    exit_code = 1


class ConfigError(UnfittedHdgError, ValueError):
    """Invalid or conflicting configuration."""
    exit_code = 2


class GeometryError(UnfittedHdgError, ValueError):
    """Invalid curve data or a geometric operation that cannot be carried out."""
    exit_code = 3


class EvaluationDomainError(GeometryError):
    """A curve parameter outside [0, 1]."""


class TopologyError(GeometryError):
    """The cut topology of the mesh is inconsistent."""


class VertexDegeneracyError(TopologyError):
    """A curve passes through a mesh vertex."""


class VisibilityError(GeometryError):
    """The visibility partition of a region did not terminate."""


class InvertedMapError(GeometryError):
    """A curved triangle map has a non-positive Jacobian."""


class SolverError(UnfittedHdgError, RuntimeError):
    """A numerical failure while assembling or solving."""
    exit_code = 4


class AssemblyError(SolverError):
    """A local problem could not be assembled or factorized.

    Parameters
    ----------
    message: str
        Description of the failure.
    elements: Sequence[int]
        Ids of the elements of the offending local problem.
    """

    def __init__(self, message: str, elements: Sequence[int] = ()):
        super().__init__(f'{message} (elements {list(elements)})')
        self.elements = list(elements)


class SingularSystemError(SolverError):
    """The global system is singular.

    Parameters
    ----------
    message: str
        Description of the failure.
    kernel_dimension: int or None
        Dimension of the numerical kernel, if it could be computed.
    """

    def __init__(self, message: str, kernel_dimension: Optional[int] = None):
        if kernel_dimension is not None:
            message = f'{message}, kernel dimension {kernel_dimension}'
        super().__init__(message)
        self.kernel_dimension = kernel_dimension


class unavailable:
    """Decorator raising an ImportError when an optional dependency is missing.

    Parameters
    ----------
    when: bool
        True, if the dependency is missing.
    library: str
        Name of the missing package, used in the error message.
    """

    def __init__(self, when: bool, library: str):
        self.when = when
        self.library = library

    def __call__(self, func):
        if not self.when:
            return func

        @functools.wraps(func)
        def error_throwing(*args, **kwargs):
            raise ImportError(f"Optional dependency {self.library} required to execute "
                              f"{func.__name__}")

        return error_throwing


def assert_shape(x, shape: tuple, ignore_if_none=False) -> None:
    """Raise a ValueError if the array x does not have the given shape."""
    if x is None:
        if ignore_if_none:
            return
        else:
            raise ValueError(f"Wanted shape {shape}, got None")

    if x.shape != shape:
        raise ValueError(f"Wanted shape {shape}, got {x.shape}")


def cross2(a: ndarray, b: ndarray) -> ndarray:
    """z-component of the cross product of (arrays of) 2D vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def polygon_signed_area(points: ndarray) -> float:
    """Shoelace area of a closed polygon given by its vertices (counterclockwise > 0)."""
    x = points[:, 0]
    y = points[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def segments_cross(p0: ndarray, p1: ndarray, q0: ndarray, q1: ndarray, tol: float) -> ndarray:
    """Proper intersection test between one segment p0-p1 and many segments q0-q1.

    Parameters
    ----------
    p0, p1: 2 np.ndarray[float]
        End points of the tested segment.
    q0, q1: m x 2 np.ndarray[float]
        End points of the segments to test against.
    tol: float
        Orientation values below tol are treated as collinear, i.e. touching
        segments do not count as crossing.

    Returns
    -------
    crosses: m np.ndarray[bool]
        True where the segments cross in their interiors.
    """
    d = p1 - p0
    o1 = cross2(d, q0 - p0)
    o2 = cross2(d, q1 - p0)
    e = q1 - q0
    o3 = cross2(e, p0 - q0)
    o4 = cross2(e, p1 - q0)
    return (o1 * o2 < -tol ** 2) & (o3 * o4 < -tol ** 2) & \
           (np.abs(o1) > tol) & (np.abs(o2) > tol) & (np.abs(o3) > tol) & (np.abs(o4) > tol)


def least_squares_slope(h: Sequence[float], values: Sequence[float]) -> Tuple[float, float]:
    """Slope and intercept of log(values) against log(h)."""
    log_h = np.log(np.asarray(h, dtype=float))
    log_v = np.log(np.asarray(values, dtype=float))
    slope, intercept = np.polyfit(log_h, log_v, 1)
    return float(slope), float(intercept)
