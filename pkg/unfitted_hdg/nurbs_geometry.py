# -*- coding: utf-8 -*-
"""Exact NURBS geometry: evaluation, derivatives, normals and curvature.

Boundaries and interfaces are sets of NURBS curves. Consecutive curves whose
end and start points agree form a chain; a closed chain is a loop such as a
circle built from four rational quadratic arcs.
"""
import math
from typing import List, Sequence, Tuple, Optional, Union

import numpy as np
from numpy import ndarray
from scipy.special import comb

from .utils import GeometryError, EvaluationDomainError, cross2

ORIENTATIONS = ('clockwise', 'counterclockwise')
ROLES = ('boundary-Dirichlet', 'boundary-Neumann', 'interface', 'wall')
BOUNDARY_ROLES = ('boundary-Dirichlet', 'boundary-Neumann', 'wall')

JOIN_TOLERANCE = 1e-10
_DOMAIN_SLACK = 1e-13


class NurbsCurve:
    """A rational B-spline curve C(lambda), lambda in [0, 1].

    Attributes
    ----------
    degree: int
        Polynomial degree p >= 1.
    knots: np.ndarray[float]
        Clamped, non-decreasing knot vector on [0, 1].
    control_points: n x 2 np.ndarray[float]
        The control polygon.
    weights: n np.ndarray[float]
        Positive weights of the control points.
    orientation: str
        'clockwise' or 'counterclockwise', relative to the region the curve
        bounds: the bounded region lies on the right of the direction of
        travel for a clockwise curve and on the left otherwise.
    role: str
        One of 'boundary-Dirichlet', 'boundary-Neumann', 'interface', 'wall'.
    fluid: int
        Fluid index of the bounded region. For an interface the other side is
        fluid 2, for a boundary it is void.
    """

    def __init__(self, degree: int, knots: Sequence[float], control_points: Sequence[Sequence[float]],
                 weights: Optional[Sequence[float]] = None, orientation: str = 'counterclockwise',
                 role: str = 'interface', fluid: int = 1):
        self.degree = int(degree)
        self.knots = np.asarray(knots, dtype=float)
        self.control_points = np.asarray(control_points, dtype=float).reshape(-1, 2)
        n = len(self.control_points)
        self.weights = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
        self.orientation = orientation
        self.role = role
        self.fluid = int(fluid)
        self._validate()

        self.control_points.setflags(write=False)
        self.weights.setflags(write=False)
        self.knots.setflags(write=False)

    def _validate(self):
        p = self.degree
        n = len(self.control_points)
        if p < 1:
            raise GeometryError(f'NURBS degree must be at least 1, got {p}')
        if len(self.knots) != n + p + 1:
            raise GeometryError(f'Expected {n + p + 1} knots for {n} control points of degree {p}, '
                                f'got {len(self.knots)}')
        if len(self.weights) != n:
            raise GeometryError(f'Expected {n} weights, got {len(self.weights)}')
        if np.any(self.weights <= 0):
            raise GeometryError('NURBS weights must be positive')
        if np.any(np.diff(self.knots) < 0):
            raise GeometryError('Knot vector must be non-decreasing')
        if np.any(self.knots[:p + 1] != 0.) or np.any(self.knots[-(p + 1):] != 1.):
            raise GeometryError('Knot vector must be clamped on [0, 1]')
        interior = self.knots[p + 1:-(p + 1)]
        if len(interior) > 0:
            _, multiplicity = np.unique(interior, return_counts=True)
            if np.any(multiplicity >= p):
                raise GeometryError('Repeated interior knots would allow cusps inside a curve')
        if self.orientation not in ORIENTATIONS:
            raise GeometryError(f'Unknown orientation {self.orientation}')
        if self.role not in ROLES:
            raise GeometryError(f'Unknown role {self.role}')
        if self.fluid not in (1, 2):
            raise GeometryError(f'Fluid index must be 1 or 2, got {self.fluid}')

    @property
    def interior_side(self) -> str:
        """Side of the direction of travel on which the bounded region lies."""
        return 'right' if self.orientation == 'clockwise' else 'left'

    @property
    def is_interface(self) -> bool:
        return self.role == 'interface'

    @property
    def is_rational(self) -> bool:
        return bool(np.any(self.weights != self.weights[0]))

    def side_labels(self) -> Tuple[int, int]:
        """Region labels (left, right) of the curve; 0 denotes void."""
        outside = 2 if self.is_interface else 0
        if self.interior_side == 'left':
            return self.fluid, outside
        return outside, self.fluid

    @property
    def start(self) -> ndarray:
        return self.control_points[0]

    @property
    def end(self) -> ndarray:
        return self.control_points[-1]

    def _check_domain(self, lam: ndarray) -> ndarray:
        if np.any(lam < -_DOMAIN_SLACK) or np.any(lam > 1. + _DOMAIN_SLACK):
            raise EvaluationDomainError(f'Curve parameter outside [0, 1]: {lam[(lam < 0) | (lam > 1)]}')
        return np.clip(lam, 0., 1.)

    def _basis(self, lam: ndarray, nders: int) -> List[ndarray]:
        """B-spline basis functions and their derivatives by the Cox-de Boor recursion.

        Returns a list of nders+1 arrays of shape len(lam) x n_control_points.
        """
        u = self.knots
        p = self.degree
        m = len(u) - 1
        # Zeroth degree: indicator of the knot span, the last non-empty span
        # being closed on the right.
        basis = [np.zeros((len(lam), m))]
        last_span = np.nonzero(u[:-1] < u[1:])[0][-1]
        for i in range(m):
            if u[i] < u[i + 1]:
                inside = (u[i] <= lam) & (lam < u[i + 1])
                if i == last_span:
                    inside |= lam == u[i + 1]
                basis[0][:, i] = inside
        for q in range(1, p + 1):
            prev = basis[q - 1]
            cur = np.zeros((len(lam), m - q))
            for i in range(m - q):
                left_den = u[i + q] - u[i]
                right_den = u[i + q + 1] - u[i + 1]
                if left_den > 0:
                    cur[:, i] += (lam - u[i]) / left_den * prev[:, i]
                if right_den > 0:
                    cur[:, i] += (u[i + q + 1] - lam) / right_den * prev[:, i + 1]
            basis.append(cur)

        def derivative(q: int, d: int) -> ndarray:
            if d == 0:
                return basis[q]
            lower = derivative(q - 1, d - 1)
            out = np.zeros((len(lam), m - q))
            for i in range(m - q):
                left_den = u[i + q] - u[i]
                right_den = u[i + q + 1] - u[i + 1]
                if left_den > 0:
                    out[:, i] += q / left_den * lower[:, i]
                if right_den > 0:
                    out[:, i] -= q / right_den * lower[:, i + 1]
            return out

        return [derivative(p, d) if d <= p else np.zeros((len(lam), m - p)) for d in range(nders + 1)]

    def _rational_derivatives(self, lam, nders: int) -> List[ndarray]:
        """Point and derivatives of the rational curve, each len(lam) x 2."""
        lam = self._check_domain(np.atleast_1d(np.asarray(lam, dtype=float)))
        basis = self._basis(lam, nders)
        weighted = self.control_points * self.weights[:, None]
        a_ders = [b @ weighted for b in basis]
        w_ders = [b @ self.weights for b in basis]
        c_ders = []
        for k in range(nders + 1):
            v = a_ders[k].copy()
            for i in range(1, k + 1):
                v -= comb(k, i) * w_ders[i][:, None] * c_ders[k - i]
            c_ders.append(v / w_ders[0][:, None])
        return c_ders

    def basis_functions(self, lam) -> ndarray:
        """Rational basis functions R_i(lambda), shape len(lam) x n_control_points."""
        lam = self._check_domain(np.atleast_1d(np.asarray(lam, dtype=float)))
        weighted = self._basis(lam, 0)[0] * self.weights
        return weighted / np.sum(weighted, axis=1, keepdims=True)

    def evaluate(self, lam) -> ndarray:
        """C(lambda) for a scalar (returns 2) or an array of parameters (returns n x 2)."""
        points = self._rational_derivatives(lam, 0)[0]
        return points[0] if np.ndim(lam) == 0 else points

    def derivatives(self, lam, order: int = 1) -> List[ndarray]:
        """[C'] or [C', C''] at lambda, with the shapes of evaluate."""
        if order not in (1, 2):
            raise ValueError(f'Derivative order must be 1 or 2, got {order}')
        ders = self._rational_derivatives(lam, order)[1:]
        return [d[0] for d in ders] if np.ndim(lam) == 0 else ders

    def jacobian(self, lam) -> Union[float, ndarray]:
        """Norm of C'(lambda); raises a GeometryError for a degenerate parametrization."""
        d1 = self._rational_derivatives(lam, 1)[1]
        norm = np.linalg.norm(d1, axis=1)
        if np.any(norm <= 1e-14 * max(1., np.max(np.abs(self.control_points)))):
            raise GeometryError('Degenerate NURBS parametrization, zero length tangent')
        return float(norm[0]) if np.ndim(lam) == 0 else norm

    def normal_and_curvature(self, lam, fluid_side: str) -> Tuple[ndarray, Union[float, ndarray]]:
        """Unit normal pointing out of the region on fluid_side, and its divergence.

        The divergence equals the signed curvature of the curve, with the sign
        such that the outward normal of a disk of radius R has divergence 1/R.
        """
        if fluid_side not in ('left', 'right'):
            raise ValueError(f'Unknown fluid side {fluid_side}')
        _, d1, d2 = self._rational_derivatives(lam, 2)
        speed = np.linalg.norm(d1, axis=1)
        if np.any(speed <= 1e-14 * max(1., np.max(np.abs(self.control_points)))):
            raise GeometryError('Degenerate NURBS parametrization, zero length tangent')
        tangent = d1 / speed[:, None]
        curvature = cross2(d1, d2) / speed ** 3
        if fluid_side == 'left':
            normal = np.column_stack((tangent[:, 1], -tangent[:, 0]))
            divergence = curvature
        else:
            normal = np.column_stack((-tangent[:, 1], tangent[:, 0]))
            divergence = -curvature
        if np.ndim(lam) == 0:
            return normal[0], float(divergence[0])
        return normal, divergence

    def arc_length(self, lam_lo: float = 0., lam_hi: float = 1., n: int = 20) -> float:
        """Length of the curve between two parameters by Gauss-Legendre quadrature."""
        x, w = np.polynomial.legendre.leggauss(n)
        lam = 0.5 * (lam_hi - lam_lo) * (x + 1.) + lam_lo
        return float(0.5 * (lam_hi - lam_lo) * np.sum(w * self.jacobian(lam)))


class CurveSegment:
    """The part of a curve between two parameters, lying in one element.

    Attributes
    ----------
    curve: NurbsCurve
    curve_id: int
        Index of the curve in the geometry.
    lambda_lo, lambda_hi: float
        Parameter range, lambda_lo < lambda_hi.
    owner_element: int
        Element whose closure contains the segment.
    """

    def __init__(self, curve: NurbsCurve, curve_id: int, lambda_lo: float, lambda_hi: float,
                 owner_element: int):
        if not lambda_lo < lambda_hi:
            raise GeometryError(f'Empty curve segment [{lambda_lo}, {lambda_hi}]')
        self.curve = curve
        self.curve_id = curve_id
        self.lambda_lo = float(lambda_lo)
        self.lambda_hi = float(lambda_hi)
        self.owner_element = owner_element

    def sample(self, n: int) -> Tuple[ndarray, ndarray]:
        """n equispaced parameters of the segment and their points."""
        lam = np.linspace(self.lambda_lo, self.lambda_hi, n)
        return lam, self.curve.evaluate(lam)

    def __repr__(self):
        return (f'CurveSegment(curve={self.curve_id}, [{self.lambda_lo:.6g}, {self.lambda_hi:.6g}], '
                f'element={self.owner_element})')


class CurveChain:
    """Consecutive curves joined end to start, parametrized by t in [0, n_curves].

    Attributes
    ----------
    curves: List[NurbsCurve]
    curve_ids: List[int]
        Indices of the curves in the geometry.
    closed: bool
        True, if the last curve ends where the first one starts.
    """

    def __init__(self, curves: List[NurbsCurve], curve_ids: List[int], closed: bool):
        self.curves = curves
        self.curve_ids = curve_ids
        self.closed = closed

    @property
    def n_curves(self) -> int:
        return len(self.curves)

    @property
    def is_interface(self) -> bool:
        return self.curves[0].is_interface

    def locate(self, t: float) -> Tuple[int, float]:
        """Index of the curve holding the chain parameter t, and the local parameter."""
        t = min(max(float(t), 0.), float(self.n_curves))
        index = min(int(math.floor(t)), self.n_curves - 1)
        return index, t - index

    def evaluate(self, t) -> ndarray:
        """Points of the chain at the parameters t (scalar or array)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        t = np.clip(t, 0., self.n_curves)
        index = np.minimum(np.floor(t).astype(int), self.n_curves - 1)
        points = np.zeros((len(t), 2))
        for i in np.unique(index):
            mask = index == i
            points[mask] = self.curves[i].evaluate(t[mask] - i)
        return points

    def length(self) -> float:
        return sum(c.arc_length() for c in self.curves)

    def sample(self, n_per_curve: int) -> Tuple[ndarray, ndarray]:
        """Equispaced parameters lambda_k = k/n on every curve, as chain parameters."""
        t = np.concatenate([i + np.arange(n_per_curve) / n_per_curve for i in range(self.n_curves)]
                           + [[float(self.n_curves)]])
        return t, self.evaluate(t)


def chain_curves(curves: Sequence[NurbsCurve], tol: float = JOIN_TOLERANCE) -> List[CurveChain]:
    """Group consecutive curves into chains by their C0 joins.

    A curve starting where the previous one ends continues the current chain;
    a chain whose last end point meets its first start point is closed.
    """
    chains = []
    current, ids = [], []

    def close_chain(closed):
        members = [c for c in current]
        sides = {(c.interior_side, c.fluid) for c in members}
        if len(sides) > 1:
            raise GeometryError(f'Curves {ids} form one chain but bound different regions')
        if len({c.is_interface for c in members}) > 1:
            raise GeometryError(f'Curves {ids} mix interface and boundary roles in one chain')
        chains.append(CurveChain(members, list(ids), closed))

    for i, curve in enumerate(curves):
        if current and np.linalg.norm(curve.start - current[-1].end) > tol:
            close_chain(False)
            current, ids = [], []
        current.append(curve)
        ids.append(i)
        if np.linalg.norm(current[-1].end - current[0].start) <= tol and \
                (len(current) > 1 or curve.arc_length() > tol):
            close_chain(True)
            current, ids = [], []
    if current:
        close_chain(False)
    return chains


def eval_curve(curve: NurbsCurve, lam: float) -> ndarray:
    """C(lambda) by rational basis evaluation.

    >>> line = make_line((0., 0.), (2., 4.))
    >>> eval_curve(line, 0.5).tolist()
    [1.0, 2.0]
    """
    return curve.evaluate(lam)


def eval_derivatives(curve: NurbsCurve, lam: float, order: int = 1) -> List[ndarray]:
    """[C'(lambda)] or [C'(lambda), C''(lambda)]."""
    return curve.derivatives(lam, order)


def line_jacobian(curve: NurbsCurve, lam: float) -> float:
    """Norm of the differential of the parametrization."""
    return curve.jacobian(lam)


def normal_and_curvature(curve: NurbsCurve, lam: float, fluid_side: str) -> Tuple[ndarray, float]:
    """Outward unit normal of the region on fluid_side and its divergence."""
    return curve.normal_and_curvature(lam, fluid_side)


def make_line(p0, p1, orientation: str = 'counterclockwise', role: str = 'interface',
              fluid: int = 1) -> NurbsCurve:
    """Straight segment from p0 to p1 as a degree one NURBS."""
    return NurbsCurve(1, [0., 0., 1., 1.], [p0, p1], orientation=orientation, role=role, fluid=fluid)


def make_polyline(points, orientation: str = 'counterclockwise', role: str = 'interface',
                  fluid: int = 1, closed: bool = False) -> List[NurbsCurve]:
    """One straight NURBS per edge of the polyline through the given points."""
    points = [np.asarray(p, dtype=float) for p in points]
    if closed:
        points = points + [points[0]]
    return [make_line(a, b, orientation, role, fluid) for a, b in zip(points[:-1], points[1:])]


def _unit_vector(angle: float) -> ndarray:
    """(cos, sin) of the angle, exact at multiples of a quarter turn."""
    quarters = angle / (0.5 * math.pi)
    if abs(quarters - round(quarters)) < 1e-12:
        return np.array([(1., 0.), (0., 1.), (-1., 0.), (0., -1.)][int(round(quarters)) % 4])
    return np.array([math.cos(angle), math.sin(angle)])


def make_arc(center, radius: float, angle_start: float, angle_end: float,
             orientation: str = 'counterclockwise', role: str = 'interface', fluid: int = 1) -> NurbsCurve:
    """Circular arc of at most 90 degrees as a rational quadratic Bezier curve."""
    if radius <= 0:
        raise GeometryError(f'Radius must be positive, got {radius}')
    sweep = angle_end - angle_start
    if abs(sweep) > 0.5 * math.pi + 1e-12 or sweep == 0.:
        raise GeometryError(f'Arc sweep must lie in (0, 90] degrees, got {math.degrees(sweep)}')
    c = np.asarray(center, dtype=float)
    half = 0.5 * sweep
    mid = angle_start + half
    p0 = c + radius * _unit_vector(angle_start)
    p2 = c + radius * _unit_vector(angle_end)
    p1 = c + radius / math.cos(half) * np.array([math.cos(mid), math.sin(mid)])
    return NurbsCurve(2, [0., 0., 0., 1., 1., 1.], [p0, p1, p2], [1., math.cos(half), 1.],
                      orientation=orientation, role=role, fluid=fluid)


def make_circle(center, radius: float, orientation: str = 'counterclockwise', role: str = 'interface',
                fluid: int = 1, fluid_outside: bool = False) -> List[NurbsCurve]:
    """Exact circle as four quadrant arcs with weights (1, sqrt(2)/2, 1).

    Parameters
    ----------
    center: 2 array-like
    radius: float
    orientation: str
        Direction in which the circle is traversed.
    role: str
    fluid: int
        Fluid index of the bounded region.
    fluid_outside: bool
        If True the bounded region is the exterior of the disk (a hole), and
        the stored orientation flag is the opposite of the traversal.
    """
    if orientation not in ORIENTATIONS:
        raise GeometryError(f'Unknown orientation {orientation}')
    sign = 1. if orientation == 'counterclockwise' else -1.
    flag = orientation
    if fluid_outside:
        flag = 'clockwise' if orientation == 'counterclockwise' else 'counterclockwise'
    quarter = 0.5 * math.pi
    return [make_arc(center, radius, sign * i * quarter, sign * (i + 1) * quarter, flag, role, fluid)
            for i in range(4)]


def make_spline(points, degree: int = 3, orientation: str = 'counterclockwise', role: str = 'wall',
                fluid: int = 1) -> NurbsCurve:
    """Clamped B-spline with uniform interior knots through the given control polygon."""
    points = np.asarray(points, dtype=float)
    n = len(points)
    if n <= degree:
        raise GeometryError(f'A degree {degree} spline needs more than {degree} control points')
    interior = np.linspace(0., 1., n - degree + 1)[1:-1]
    knots = np.concatenate((np.zeros(degree + 1), interior, np.ones(degree + 1)))
    return NurbsCurve(degree, knots, points, orientation=orientation, role=role, fluid=fluid)
