# -*- coding: utf-8 -*-
"""Benchmark cases: geometry library, reference solutions and boundary data.

Every case lives on the computational square (0, 1)^2. `create_case` turns a
resolved configuration into a `Case` holding the background mesh, the curves,
the physical constants, the boundary data and, where one is known, the
analytic reference solution.
"""
import math
import warnings
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from numpy import ndarray

from .cartesian_mesh import CartesianMesh, PeriodicPairing, build_mesh, pair_periodic
from .cut_classification import CutTopology
from .geometry_io import read_geometry
from .hdg_local import BoundaryData, PhysicsParams
from .nefem_quadrature import CutQuadrature
from .nurbs_geometry import NurbsCurve, make_arc, make_circle, make_line, make_polyline, make_spline
from .utils import ConfigError, assert_shape

CASES = ('manufactured', 'taylor_couette', 'bubble', 'm_shape', 'smoothed_square', 'microchannel', 'emulsion')
PERIODIC_CASES = ('bubble', 'emulsion')
PERIODIC_AXES = {'x': (0,), 'y': (1,), 'xy': (0, 1)}

CENTER = (0.5, 0.5)

TAYLOR_COUETTE_RADII = (1. / 6., 1. / 3.)
TAYLOR_COUETTE_OMEGA = (0., 1.)

BUBBLE_RADIUS = 1. / 3.

M_SHAPE_EPSILONS = (5e-3, 5e-2, 1e-1, 1.5e-1)

SMOOTHED_SQUARE_BOX = (0.1, 0.9)
SMOOTHED_SQUARE_RADIUS = 0.15

# (x_c, y_c, R), ordered from left to right
MICROCHANNEL_OBSTACLES = ((0.410, 0.438, 0.034), (0.460, 0.452, 0.012), (0.482, 0.477, 0.012),
                          (0.500, 0.510, 0.020), (0.500, 0.560, 0.025), (0.545, 0.560, 0.015),
                          (0.573, 0.585, 0.020), (0.630, 0.580, 0.030))
MICROCHANNEL_INLET = ((0.55, 0.97), (0.45, 0.97))
MICROCHANNEL_OUTLET = ((0.45, 0.03), (0.55, 0.03))
MICROCHANNEL_RIGHT_WALL = ((0.55, 0.03), (0.55, 0.2), (0.74, 0.36), (0.74, 0.66), (0.55, 0.8), (0.55, 0.97))
MICROCHANNEL_LEFT_WALL = ((0.45, 0.97), (0.45, 0.8), (0.31, 0.64), (0.31, 0.34), (0.45, 0.2), (0.45, 0.03))
MICROCHANNEL_INFLOW = (0., -1.)

PORE_RADIUS = 0.25231
EMULSION_DROPLETS = ((0.156, 0.156, 0.030), (0.156, 0.844, 0.030), (0.844, 0.844, 0.030), (0.844, 0.156, 0.030),
                     (0.50, 0.10, 0.026), (0.10, 0.50, 0.026), (0.50, 0.90, 0.026), (0.90, 0.50, 0.026),
                     (0.70, 0.11, 0.026), (0.30, 0.11, 0.026), (0.11, 0.30, 0.026), (0.11, 0.70, 0.026),
                     (0.30, 0.89, 0.026), (0.70, 0.89, 0.026), (0.89, 0.70, 0.026), (0.89, 0.30, 0.026),
                     (0.75, 0.25, 0.022), (0.25, 0.25, 0.022), (0.25, 0.75, 0.022), (0.75, 0.75, 0.022),
                     (0.59, 0.16, 0.015), (0.41, 0.16, 0.015), (0.16, 0.41, 0.015), (0.16, 0.59, 0.015),
                     (0.41, 0.84, 0.015), (0.59, 0.84, 0.015), (0.84, 0.41, 0.015), (0.84, 0.59, 0.015))
EMULSION_GRAVITY = (0., -613.125)

Field = Callable[[ndarray], ndarray]


class ReferenceSolution:
    """Analytic fields of a case.

    Attributes
    ----------
    u: callable
        points -> n x 2 velocity.
    p: callable
        points -> n pressure.
    grad_u: callable
        points -> n x 4 velocity gradient, ordered du0/dx, du0/dy, du1/dx, du1/dy.
    source: callable
        points -> n x 2 body force s = -div(mu grad u - p I).
    mu: float
        Viscosity the source was derived with.
    """

    def __init__(self, name: str, u: Field, p: Field, grad_u: Field, source: Field, mu: float = 1.):
        self.name = name
        self.u = u
        self.p = p
        self.grad_u = grad_u
        self.source = source
        self.mu = mu

    def L(self, points: ndarray) -> ndarray:
        """Mixed variable L = -sqrt(mu) grad u."""
        return -math.sqrt(self.mu) * self.grad_u(points)

    def traction(self, points: ndarray, normals: ndarray) -> ndarray:
        """(mu grad u - p I) n."""
        grad = self.grad_u(points).reshape(-1, 2, 2)
        stress = self.mu * grad - self.p(points)[:, None, None] * np.eye(2)
        return np.einsum('nab,nb->na', stress, normals)


def _g(x):
    return x ** 2 * (1. - x) ** 2


def _dg(x):
    return 2. * x - 6. * x ** 2 + 4. * x ** 3


def _d2g(x):
    return 2. - 12. * x + 12. * x ** 2


def _d3g(x):
    return -12. + 24. * x


def manufactured_reference(mu: float = 1.) -> ReferenceSolution:
    """Divergence free polynomial velocity with p = x (1 - x) on the unit square.

    >>> ref = manufactured_reference()
    >>> ref.u(np.array([[0.5, 0.5]])).tolist(), ref.p(np.array([[0.5, 0.3]])).tolist()
    ([[0.0, -0.0]], [0.25])
    """
    def u(points):
        x, y = points[:, 0], points[:, 1]
        return np.column_stack((_g(x) * _dg(y), -_g(y) * _dg(x)))

    def p(points):
        x = points[:, 0]
        return x * (1. - x)

    def grad_u(points):
        x, y = points[:, 0], points[:, 1]
        return np.column_stack((_dg(x) * _dg(y), _g(x) * _d2g(y), -_g(y) * _d2g(x), -_dg(y) * _dg(x)))

    def source(points):
        x, y = points[:, 0], points[:, 1]
        laplace_u0 = _d2g(x) * _dg(y) + _g(x) * _d3g(y)
        laplace_u1 = -(_d2g(y) * _dg(x) + _g(y) * _d3g(x))
        return np.column_stack((-mu * laplace_u0 + 1. - 2. * x, -mu * laplace_u1))

    return ReferenceSolution('manufactured', u, p, grad_u, source, mu)


def taylor_couette_coefficients(radii: Tuple[float, float] = TAYLOR_COUETTE_RADII,
                                omega: Tuple[float, float] = TAYLOR_COUETTE_OMEGA) -> Tuple[float, float]:
    """A and B of the azimuthal velocity (A + B / r^2) r.

    >>> A, B = taylor_couette_coefficients()
    >>> round(A, 12), round(B, 12)
    (1.333333333333, -0.037037037037)
    """
    r_int, r_ext = radii
    w_int, w_ext = omega
    denominator = r_ext ** 2 - r_int ** 2
    A = (w_ext * r_ext ** 2 - w_int * r_int ** 2) / denominator
    B = (w_int - w_ext) * r_ext ** 2 * r_int ** 2 / denominator
    return A, B


def taylor_couette_reference(center=CENTER, radii: Tuple[float, float] = TAYLOR_COUETTE_RADII,
                             omega: Tuple[float, float] = TAYLOR_COUETTE_OMEGA) -> ReferenceSolution:
    """Flow between two coaxial rotating circles, p = 1 and no body force.

    The fields are defined for any r > 0; points outside the annulus trigger a
    warning.
    """
    A, B = taylor_couette_coefficients(radii, omega)
    xc, yc = center
    r_int, r_ext = radii

    def polar(points):
        X, Y = points[:, 0] - xc, points[:, 1] - yc
        r2 = X ** 2 + Y ** 2
        slack = 1e-8 * r_ext
        if np.any(r2 < (r_int - slack) ** 2) or np.any(r2 > (r_ext + slack) ** 2):
            warnings.warn('Taylor-Couette reference evaluated outside the annulus')
        return X, Y, r2

    def u(points):
        X, Y, r2 = polar(points)
        f = A + B / r2
        return np.column_stack((-f * Y, f * X))

    def p(points):
        return np.ones(len(points))

    def grad_u(points):
        X, Y, r2 = polar(points)
        f = A + B / r2
        c = 2. * B / r2 ** 2
        return np.column_stack((c * X * Y, -f + c * Y ** 2, f - c * X ** 2, -c * X * Y))

    def source(points):
        return np.zeros((len(points), 2))

    return ReferenceSolution('taylor_couette', u, p, grad_u, source)


def bubble_reference(center=CENTER, radius: float = BUBBLE_RADIUS, gamma: float = 1.) -> ReferenceSolution:
    """Static bubble: u = 0, p = pi R gamma outside and pi R gamma - gamma / R inside.

    The outside value makes the mean pressure over the unit square vanish.
    """
    center = np.asarray(center, dtype=float)
    outside = math.pi * radius * gamma

    def u(points):
        return np.zeros((len(points), 2))

    def p(points):
        inside = np.sum((points - center) ** 2, axis=1) < radius ** 2
        return np.where(inside, outside - gamma / radius, outside)

    def grad_u(points):
        return np.zeros((len(points), 4))

    return ReferenceSolution('bubble', u, p, grad_u, u)


def _central_difference(f: Field, points: ndarray, axis: int, step: float, second: bool) -> ndarray:
    shift = np.zeros(2)
    shift[axis] = step
    values = [np.asarray(f(points + m * shift), dtype=float) for m in (-2, -1, 0, 1, 2)]
    if second:
        return (-values[0] + 16. * values[1] - 30. * values[2] + 16. * values[3] - values[4]) / (12. * step ** 2)
    return (values[0] - 8. * values[1] + 8. * values[3] - values[4]) / (12. * step)


def source_residual(reference: ReferenceSolution, points: ndarray, step: float = 1e-3) -> float:
    """Max norm of s + div(mu grad u - p I) by fourth order finite differences."""
    assert_shape(points, (len(points), 2))
    laplace = sum(_central_difference(reference.u, points, axis, step, True) for axis in range(2))
    grad_p = np.column_stack([_central_difference(reference.p, points, axis, step, False) for axis in range(2)])
    residual = reference.source(points) + reference.mu * laplace - grad_p
    return float(np.max(np.abs(residual)))


def gradient_residual(reference: ReferenceSolution, points: ndarray, step: float = 1e-3) -> float:
    """Max norm of grad_u minus its finite difference approximation."""
    columns = [_central_difference(reference.u, points, axis, step, False) for axis in range(2)]
    approx = np.column_stack((columns[0][:, 0], columns[1][:, 0], columns[0][:, 1], columns[1][:, 1]))
    return float(np.max(np.abs(reference.grad_u(points) - approx)))


def reference_mean(topology: CutTopology, quadrature: CutQuadrature, p: Field, n: int = 8) -> float:
    """Mean of p over the fluid domain of a cut topology."""
    total, area = 0., 0.
    for e in topology.active_elements():
        for label in topology.labels(e):
            rule = quadrature.element_rule(e, label, n)
            if len(rule) == 0:
                continue
            total += float(rule.integrate(p(rule.points)))
            area += rule.area
    return total / area


def taylor_couette_geometry(center=CENTER, radii: Tuple[float, float] = TAYLOR_COUETTE_RADII) -> List[NurbsCurve]:
    """Outer circle bounding the fluid and inner circle cutting a hole."""
    outer = make_circle(center, radii[1], role='boundary-Dirichlet')
    inner = make_circle(center, radii[0], role='boundary-Dirichlet', fluid_outside=True)
    return outer + inner


def bubble_geometry(center=CENTER, radius: float = BUBBLE_RADIUS) -> List[NurbsCurve]:
    """Circular interface with fluid 1 inside."""
    return make_circle(center, radius, role='interface')


def m_shape_geometry(epsilon: float) -> List[NurbsCurve]:
    """Notch of the M-shaped domain, running between two corners of the active box.

    The other three sides of (0.25, 0.75) x (0.25, 1) lie on mesh lines of
    any mesh with a multiple of four elements per direction.
    """
    if not 0 < epsilon < 0.25:
        raise ConfigError(f'M-shape epsilon must lie in (0, 0.25), got {epsilon}')
    return make_polyline([(0.25, 1.), (0.5, 0.75 + epsilon), (0.75, 1.)], orientation='clockwise',
                         role='boundary-Dirichlet')


def m_shape_active_box(n: int) -> Tuple[int, int, int, int]:
    if n % 4:
        raise ConfigError(f'The M-shape needs a multiple of 4 elements per direction, got {n}')
    return n // 4, n // 4, 3 * n // 4, n


def smoothed_square_geometry(radius: float = SMOOTHED_SQUARE_RADIUS,
                             box: Tuple[float, float] = SMOOTHED_SQUARE_BOX) -> List[NurbsCurve]:
    """Square with concave quarter circles removed at its four corners."""
    lo, hi = box
    corners = [(hi, lo), (hi, hi), (lo, hi), (lo, lo)]
    starts = [math.pi, 1.5 * math.pi, 0., 0.5 * math.pi]
    arcs = [make_arc(c, radius, a, a - 0.5 * math.pi, role='boundary-Dirichlet') for c, a in zip(corners, starts)]
    curves = []
    for i, arc in enumerate(arcs):
        previous = arcs[i - 1]
        curves.append(make_line(previous.end, arc.start, role='boundary-Dirichlet'))
        curves.append(arc)
    return curves


def microchannel_geometry(obstacles: Sequence[Tuple[float, float, float]] = MICROCHANNEL_OBSTACLES
                          ) -> List[NurbsCurve]:
    """Divergent-convergent channel with inlet on top, outlet at the bottom and circular obstacles."""
    outline = [make_line(*MICROCHANNEL_OUTLET, role='boundary-Neumann'),
               make_spline(MICROCHANNEL_RIGHT_WALL, role='wall'),
               make_line(*MICROCHANNEL_INLET, role='boundary-Dirichlet'),
               make_spline(MICROCHANNEL_LEFT_WALL, role='wall')]
    for xc, yc, r in obstacles:
        outline += make_circle((xc, yc), r, role='wall', fluid_outside=True)
    return outline


def emulsion_geometry(droplets: Sequence[Tuple[float, float, float]] = EMULSION_DROPLETS,
                      pore_radius: float = PORE_RADIUS) -> List[NurbsCurve]:
    """Rigid pore in the center of the cell and droplets of fluid 1 in fluid 2."""
    curves = make_circle(CENTER, pore_radius, role='wall', fluid=2, fluid_outside=True)
    for xc, yc, r in droplets:
        curves += make_circle((xc, yc), r, role='interface')
    return curves


def porosity(pore_radius: float = PORE_RADIUS) -> float:
    """Fluid fraction of the unit cell.

    >>> round(porosity(), 3)
    0.8
    """
    return 1. - math.pi * pore_radius ** 2


def _constant(value) -> Field:
    value = np.asarray(value, dtype=float)
    return lambda points: np.tile(value, (len(points), 1))


class Case:
    """A benchmark problem ready to be classified and solved.

    Attributes
    ----------
    name: str
    curves: List[NurbsCurve]
    mesh: CartesianMesh
    pairing: PeriodicPairing
    params: PhysicsParams
    bc: BoundaryData
    reference: ReferenceSolution or None
    mean_pressure: float or None
        Imposed mean pressure when no boundary carries Neumann data.
    mean_from_reference: bool
        If True the mean pressure is the mean of the reference pressure over
        the fluid domain, see `reference_mean`.
    """

    def __init__(self, name: str, curves: List[NurbsCurve], mesh: CartesianMesh, params: PhysicsParams,
                 bc: BoundaryData, reference: Optional[ReferenceSolution] = None,
                 pairing: Optional[PeriodicPairing] = None, mean_pressure: Optional[float] = 0.,
                 mean_from_reference: bool = False):
        self.name = name
        self.curves = curves
        self.mesh = mesh
        self.pairing = pairing or PeriodicPairing()
        self.params = params
        self.bc = bc
        self.reference = reference
        self.mean_pressure = mean_pressure
        self.mean_from_reference = mean_from_reference

    def resolve_mean_pressure(self, topology: CutTopology, quadrature: CutQuadrature) -> Optional[float]:
        if self.mean_from_reference:
            return reference_mean(topology, quadrature, self.reference.p)
        return self.mean_pressure


def _periodic_pairing(mesh: CartesianMesh, periodic: Optional[str]) -> PeriodicPairing:
    pairing = PeriodicPairing()
    if periodic is None:
        return pairing
    if periodic not in PERIODIC_AXES:
        raise ConfigError(f'Unknown value for periodic, {periodic}')
    for axis in PERIODIC_AXES[periodic]:
        pairing = pairing.merge(pair_periodic(mesh, axis))
    return pairing


def _physics(conf, **defaults) -> PhysicsParams:
    """PhysicsParams from the config, with case defaults for unset values."""
    values = {key: getattr(conf, key, None) for key in ('mu1', 'mu2', 'gamma', 'c_tau', 'eta', 'ell')}
    values = {key: value for key, value in values.items() if value is not None}
    return PhysicsParams(**{**defaults, **values})


def create_case(conf) -> Case:
    """Build the case named by conf.case.

    Parameters
    ----------
    conf: DefaultConfig
        Uses case, mesh, periodic, geometry_file and the physical constants
        (mu1, mu2, gamma, c_tau, eta, ell); case specific options are
        m_shape_epsilon and neumann_sides.

    Returns
    -------
    case: Case
    """
    name = conf.case
    if name not in CASES:
        raise ConfigError(f'Unknown case {name}, expected one of {CASES}')
    n = int(conf.mesh)
    periodic = getattr(conf, 'periodic', None)
    if periodic is not None and name not in PERIODIC_CASES:
        raise ConfigError(f'Case {name} does not support periodic boundaries')

    if name == 'manufactured':
        params = _physics(conf)
        reference = manufactured_reference(params.mu1)
        params.source = reference.source
        neumann_sides = tuple(getattr(conf, 'neumann_sides', ()) or ())
        bc = BoundaryData(dirichlet=reference.u, traction=reference.traction, neumann_sides=neumann_sides)
        case = Case(name, [], build_mesh((0., 0.), (1., 1.), n, n), params, bc, reference,
                    mean_pressure=None if neumann_sides else 1. / 6.)
    elif name == 'taylor_couette':
        params = _physics(conf)
        reference = taylor_couette_reference()
        reference.mu = params.mu1
        case = Case(name, taylor_couette_geometry(), build_mesh((0., 0.), (1., 1.), n, n), params,
                    BoundaryData(dirichlet=reference.u), reference, mean_pressure=1.)
    elif name == 'bubble':
        params = _physics(conf, mu1=10., mu2=1., gamma=1.)
        mesh = build_mesh((0., 0.), (1., 1.), n, n)
        # fully periodic, the velocity is only defined up to a constant
        bc = BoundaryData(mean_velocity=(0., 0.) if periodic == 'xy' else None)
        case = Case(name, bubble_geometry(), mesh, params, bc,
                    bubble_reference(gamma=params.gamma), _periodic_pairing(mesh, periodic))
    elif name in ('m_shape', 'smoothed_square'):
        params = _physics(conf)
        reference = manufactured_reference(params.mu1)
        params.source = reference.source
        if name == 'm_shape':
            mesh = build_mesh((0., 0.), (1., 1.), n, n, active_box=m_shape_active_box(n))
            curves = m_shape_geometry(conf.m_shape_epsilon)
        else:
            mesh = build_mesh((0., 0.), (1., 1.), n, n)
            curves = smoothed_square_geometry()
        case = Case(name, curves, mesh, params, BoundaryData(dirichlet=reference.u), reference,
                    mean_from_reference=True)
    elif name == 'microchannel':
        case = Case(name, microchannel_geometry(), build_mesh((0., 0.), (1., 1.), n, n), _physics(conf),
                    BoundaryData(dirichlet=_constant(MICROCHANNEL_INFLOW)), mean_pressure=None)
    else:
        params = _physics(conf, mu1=40., mu2=4., gamma=2.4e5, source=_constant(EMULSION_GRAVITY))
        mesh = build_mesh((0., 0.), (1., 1.), n, n)
        case = Case(name, emulsion_geometry(), mesh, params, BoundaryData(), pairing=_periodic_pairing(mesh, periodic))

    geometry_file = getattr(conf, 'geometry_file', None)
    if geometry_file is not None:
        case.curves = read_geometry(geometry_file)
    return case
