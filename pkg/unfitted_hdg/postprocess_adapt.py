# -*- coding: utf-8 -*-
"""Velocity postprocess, element error estimator, degree adaptivity and mass flux diagnostics."""
import math
import warnings
from typing import Dict, List, Optional, Sequence, Tuple, Callable

import numpy as np
from numpy import ndarray
import scipy.linalg

from .bases import postprocess_basis, K_MIN
from .cartesian_mesh import CartesianMesh, OUTWARD_NORMALS
from .cut_classification import CutTopology
from .hdg_local import PhysicsParams, BoundaryData, FieldKey, DIRICHLET_ROLES, element_face_terms
from .hdg_solver import Solution, solve_stokes
from .nefem_quadrature import CutQuadrature, face_rule
from .utils import ConfigError

K_MAX_ADAPT = 6
MAX_ADAPT_ITERATIONS = 10
ABSOLUTE_ERROR_THRESHOLD = 1e-10
FLUX_VARIANTS = ('data', 'element')


class PostprocessedField:
    """Velocity u* of degree k+1 of one field.

    Attributes
    ----------
    host: int
    label: int
    degree: int
        Degree of u*, one more than the field degree.
    u: 2 x N np.ndarray[float]
    rank_deficient: bool
        True if the constrained system lost rank beyond the constant modes.
    """

    def __init__(self, host: int, label: int, degree: int, u: ndarray, rank_deficient: bool = False):
        self.host = host
        self.label = label
        self.degree = degree
        self.u = u
        self.rank_deficient = rank_deficient

    def evaluate(self, mesh: CartesianMesh, points: ndarray) -> ndarray:
        basis = postprocess_basis(self.degree - 1)
        return basis.values(mesh.to_reference(self.host, np.atleast_2d(points))) @ self.u.T


def _field_rule(solution: Solution, key: FieldKey, n: int) -> Tuple[ndarray, ndarray]:
    """Points and weights over every region the field covers."""
    host, label = key
    points, weights = [], []
    for e in solution.topology.fields().get(key, [host]):
        rule = solution.quadrature.element_rule(e, label, n)
        points.append(rule.points)
        weights.append(rule.weights)
    return np.vstack(points), np.concatenate(weights)


def postprocess_field(solution: Solution, key: FieldKey) -> PostprocessedField:
    """Solve (grad w, sqrt(mu) grad u*) = -(grad w, L) with (u*, 1) = (u, 1) on the region of one field."""
    mesh = solution.topology.mesh
    field = solution.fields[key]
    basis = postprocess_basis(field.degree)
    points, w = _field_rule(solution, key, field.degree + 4)
    L, u, _ = field.evaluate(mesh, points)
    ref = mesh.to_reference(key[0], points)
    phi = basis.values(ref)
    d_xi, d_eta = basis.gradients(ref)
    gx, gy = d_xi * (2. / mesh.h[0]), d_eta * (2. / mesh.h[1])
    sqrt_mu = solution.params.sqrt_mu(key[1])

    n = basis.dimension
    stiffness = sqrt_mu * (gx.T @ (w[:, None] * gx) + gy.T @ (w[:, None] * gy))
    mean_row = phi.T @ w
    system = np.zeros((n + 1, n + 1))
    system[:n, :n] = stiffness
    system[:n, n] = system[n, :n] = mean_row / np.sum(w)
    rhs = np.zeros((n + 1, 2))
    for a in range(2):
        rhs[:n, a] = -(gx.T @ (w * L[:, 2 * a]) + gy.T @ (w * L[:, 2 * a + 1]))
        rhs[n, a] = np.sum(w * u[:, a]) / np.sum(w)
    solved, _, rank, _ = scipy.linalg.lstsq(system, rhs)
    deficient = rank < n + 1
    if deficient:
        warnings.warn(f'Postprocess of field {key} is rank deficient (rank {rank} of {n + 1})')
    return PostprocessedField(key[0], key[1], basis.degree, solved[:n].T.copy(), deficient)


def postprocess_velocity(solution: Solution, keys: Optional[Sequence[FieldKey]] = None
                         ) -> Dict[FieldKey, PostprocessedField]:
    """Superconvergent velocity of every field (or of the given ones)."""
    keys = sorted(solution.fields) if keys is None else keys
    return {key: postprocess_field(solution, key) for key in keys}


def region_error(weights: ndarray, u: ndarray, u_star: ndarray,
                 threshold: float = ABSOLUTE_ERROR_THRESHOLD) -> float:
    """Relative L2 distance of u to u* on a region, absolute when u* is below the threshold.

    >>> w = np.ones(3)
    >>> u = np.ones((3, 2))
    >>> region_error(w, u, 2. * u)
    0.5
    """
    difference = math.sqrt(float(np.sum(weights[:, None] * (u_star - u) ** 2)))
    norm = math.sqrt(float(np.sum(weights[:, None] * u_star ** 2)))
    if norm < threshold:
        return difference
    return difference / norm


def estimate_error(solution: Solution, postprocessed: Dict[FieldKey, PostprocessedField]) -> ndarray:
    """E_e per element, the largest region error over the fluids of e; zero on inactive elements."""
    topology, mesh = solution.topology, solution.topology.mesh
    errors = np.zeros(topology.n_elements)
    for e in topology.active_elements():
        for label in topology.labels(e):
            key = (topology.field_host(e, label), label)
            field = solution.fields[key]
            rule = solution.quadrature.element_rule(e, label, field.degree + 3)
            if len(rule) == 0:
                continue
            _, u, _ = field.evaluate(mesh, rule.points)
            u_star = postprocessed[key].evaluate(mesh, rule.points)
            errors[e] = max(errors[e], region_error(rule.weights, u, u_star))
    return errors


def degree_increment(error: float, tolerance: float, h: float, k: int, k_min: int = K_MIN) -> int:
    """ceil(log(tolerance / E) / log(h)); a vanishing error drops the degree to k_min.

    >>> degree_increment(1e-2 * 1e3, 1e-2, 1. / 32, 1)
    2
    >>> degree_increment(1e-2, 1e-2, 1. / 32, 3)
    0
    """
    if not 0. < h < 1.:
        raise ConfigError(f'Degree adaptivity needs an element size in (0, 1), got {h}')
    if error <= 0.:
        return k_min - k
    return int(math.ceil(math.log(tolerance / error) / math.log(h) - 1e-12))


class AdaptState:
    """State of the degree adaptivity loop.

    Attributes
    ----------
    degrees: np.ndarray[int]
        k_e per element.
    errors: np.ndarray[float]
        E_e of the last solve.
    tolerance: float
    iteration: int
    converged: bool
    k_min, k_max: int
    history: List[np.ndarray[int]]
        Degrees of every iteration, the current ones last.
    frozen: set
        Elements whose degree oscillated and is kept fixed.
    """

    def __init__(self, degrees: ndarray, tolerance: float, k_min: int = K_MIN, k_max: int = K_MAX_ADAPT):
        if tolerance <= 0:
            raise ConfigError(f'Adapt tolerance must be positive, got {tolerance}')
        if not K_MIN <= k_min <= k_max:
            raise ConfigError(f'Invalid degree bounds [{k_min}, {k_max}]')
        self.degrees = np.clip(np.asarray(degrees, dtype=int), k_min, k_max)
        self.errors = np.zeros(len(self.degrees))
        self.tolerance = float(tolerance)
        self.iteration = 0
        self.converged = False
        self.k_min = k_min
        self.k_max = k_max
        self.history = [self.degrees.copy()]
        self.frozen = set()


def adapt_degrees(state: AdaptState, errors: ndarray, h: float, elements: Optional[Sequence[int]] = None
                  ) -> AdaptState:
    """Update k_e by the degree increment, clamp to [k_min, k_max] and guard against oscillation.

    Parameters
    ----------
    state: AdaptState
    errors: np.ndarray[float]
        E_e per element.
    h: float
        Element size, below one.
    elements: Sequence[int], optional
        Elements to adapt, all by default.
    """
    elements = range(len(state.degrees)) if elements is None else elements
    new = state.degrees.copy()
    previous = state.history[-2] if len(state.history) > 1 else None
    frozen = set(state.frozen)
    for e in elements:
        if e in frozen:
            continue
        k = int(state.degrees[e])
        proposal = int(np.clip(k + degree_increment(errors[e], state.tolerance, h, k, state.k_min),
                               state.k_min, state.k_max))
        if previous is not None and proposal == previous[e] and abs(proposal - k) == 1:
            proposal = max(proposal, k)
            frozen.add(e)
        new[e] = proposal

    result = AdaptState(new, state.tolerance, state.k_min, state.k_max)
    result.errors = np.asarray(errors, dtype=float).copy()
    result.iteration = state.iteration + 1
    result.history = state.history + [new.copy()]
    result.frozen = frozen
    result.converged = bool(np.all(new == state.degrees))
    return result


def run_adaptivity(topology: CutTopology, params: PhysicsParams, bc: BoundaryData, tolerance: float,
                   k_initial: int = 1, k_min: int = K_MIN, k_max: int = K_MAX_ADAPT,
                   max_iterations: int = MAX_ADAPT_ITERATIONS, face_basis: str = 'legendre',
                   mean_pressure: Optional[float] = 0., verbosity: int = 0
                   ) -> Tuple[Solution, AdaptState, List[Dict[str, float]]]:
    """Solve, estimate and update the degrees until no element changes.

    Returns
    -------
    solution: Solution
        Solution with the final degrees.
    state: AdaptState
    trace: List[Dict]
        Rows (iteration, element, k_e, E_e) of every iteration.
    """
    h = topology.mesh.element_size
    if not h < 1.:
        raise ConfigError(f'Degree adaptivity needs h_e < 1, got {h}')
    state = AdaptState(np.full(topology.n_elements, k_initial), tolerance, k_min, k_max)
    quadrature = CutQuadrature(topology)
    active = topology.active_elements()
    trace = []
    solution = None
    for iteration in range(max_iterations):
        solution = solve_stokes(topology, state.degrees, params, bc, face_basis, mean_pressure, quadrature)
        errors = estimate_error(solution, postprocess_velocity(solution))
        trace += [{'iteration': iteration, 'element': e, 'k_e': int(state.degrees[e]), 'E_e': float(errors[e])}
                  for e in active]
        state = adapt_degrees(state, errors, h, active)
        if verbosity > 0:
            print(f'Adapt iteration {iteration}: max E_e = {np.max(errors[active]):.3e}, '
                  f'degrees {np.min(state.degrees[active])}..{np.max(state.degrees[active])}')
        if state.converged:
            break
    if not state.converged:
        warnings.warn(f'Degree adaptivity did not converge within {max_iterations} iterations')
        solution = solve_stokes(topology, state.degrees, params, bc, face_basis, mean_pressure, quadrature)
    return solution, state, trace


class FluxReport:
    """Mass fluxes J_S over a partition of the active elements.

    With the data on immersed Dirichlet curves, J_S restates the compatibility
    condition and vanishes up to solver precision. The element variant takes
    the element velocity there and measures the mass defect left by the weak
    imposition of the boundary data.

    Attributes
    ----------
    subsets: List[Tuple[List[int], str, float]]
        (elements, kind, J_S) with kind 'extended', 'cut' or 'uncut'.
    variant: str
    balance: List[float]
        J_S of every subset with the data variant, in the order of subsets.
    """

    def __init__(self, subsets: List[Tuple[List[int], str, float]], variant: str,
                 balance: Optional[List[float]] = None):
        self.subsets = subsets
        self.variant = variant
        self.balance = [value for _, _, value in subsets] if balance is None else balance

    @property
    def global_sum(self) -> float:
        """Sum of the data balances, zero when mass is conserved over the domain."""
        return float(sum(self.balance))

    def max_abs(self, kinds: Sequence[str]) -> float:
        values = [abs(value) for _, kind, value in self.subsets if kind in kinds]
        return max(values, default=0.)

    def to_csv_rows(self) -> List[Dict[str, object]]:
        return [{'elements': ';'.join(map(str, elements)), 'kind': kind, 'J_S': value, 'balance': balance}
                for (elements, kind, value), balance in zip(self.subsets, self.balance)]


def flux_subsets(topology: CutTopology) -> List[Tuple[List[int], str]]:
    """Partition of the active elements: extended patches, single cut cells and uncut cells."""
    result = []
    for patch in topology.patches():
        if len(patch) > 1:
            result.append((patch, 'extended'))
        elif topology.classification(patch[0]) == 'standard':
            result.append((patch, 'uncut'))
        else:
            result.append((patch, 'cut'))
    return result


def mass_flux(solution: Solution, subset: Sequence[int], variant: str = 'data') -> float:
    """Net velocity flux through the contour of a subset of elements.

    The hybrid velocity is used on skeleton portions, the element velocity on
    Neumann portions and, on Dirichlet portions, the data ('data') or, on
    immersed curves, the element velocity ('element').
    """
    if variant not in FLUX_VARIANTS:
        raise ConfigError(f'Unknown value for flux variant, {variant}')
    topology, mesh = solution.topology, solution.topology.mesh
    bc = solution.bc
    total = 0.
    for e in subset:
        for label in topology.labels(e):
            field = solution.field(e, label)
            n = field.degree + 3
            for side, face, t0, t1, kind, portion in element_face_terms(topology, solution.dofmap,
                                                                         bc.neumann_sides, e, label):
                rule = face_rule(mesh, face, t0, t1, n, OUTWARD_NORMALS[side])
                if kind == 'hybrid':
                    velocity = solution.dofmap.evaluate(solution.hybrid, portion, rule.params)
                elif kind == 'dirichlet':
                    velocity = bc.velocity(rule.points)
                else:
                    velocity = field.evaluate(mesh, rule.points)[1]
                total += rule.integrate(np.sum(velocity * rule.normals, axis=1))
        n = max(solution.field(e, label).degree for label in topology.labels(e)) + 3
        for segment, rule in solution.quadrature.curve_rules(e, n):
            curve = segment.curve
            if curve.is_interface:
                continue
            if curve.role in DIRICHLET_ROLES and variant == 'data':
                velocity = bc.velocity(rule.points, curve.role)
            else:
                velocity = solution.field(e, curve.fluid).evaluate(mesh, rule.points)[1]
            total += rule.integrate(np.sum(velocity * rule.normals, axis=1))
    return float(total)


def flux_report(solution: Solution, variant: str = 'element') -> FluxReport:
    subsets = flux_subsets(solution.topology)
    balance = [mass_flux(solution, elements, 'data') for elements, _ in subsets]
    values = balance if variant == 'data' else [mass_flux(solution, elements, variant) for elements, _ in subsets]
    return FluxReport([(elements, kind, value) for (elements, kind), value in zip(subsets, values)], variant, balance)


def pressure_jump(solution: Solution, cell: int) -> float:
    """Mean pressure of fluid 1 minus mean pressure of fluid 2 inside an interface cell."""
    means = []
    for label in (1, 2):
        field = solution.field(cell, label)
        rule = solution.quadrature.element_rule(cell, label, field.degree + 3)
        if len(rule) == 0:
            raise ConfigError(f'Element {cell} holds no region of fluid {label}')
        p = field.evaluate(solution.topology.mesh, rule.points)[2]
        means.append(rule.integrate(p) / rule.area)
    return float(means[0] - means[1])


def error_norms(solution: Solution, u: Optional[Callable[[ndarray], ndarray]] = None,
                p: Optional[Callable[[ndarray], ndarray]] = None, L: Optional[Callable[[ndarray], ndarray]] = None,
                postprocessed: Optional[Dict[FieldKey, PostprocessedField]] = None) -> Dict[str, float]:
    """L2 errors over the fluid domain against the given reference fields.

    Returns
    -------
    errors: Dict[str, float]
        Keys 'u', 'p', 'L' and 'u_star' for the references that are given.
    """
    topology, mesh = solution.topology, solution.topology.mesh
    squared = {}
    for e in topology.active_elements():
        for label in topology.labels(e):
            key = (topology.field_host(e, label), label)
            field = solution.fields[key]
            rule = solution.quadrature.element_rule(e, label, field.degree + 4)
            if len(rule) == 0:
                continue
            L_h, u_h, p_h = field.evaluate(mesh, rule.points)
            pairs = []
            if u is not None:
                u_ref = np.asarray(u(rule.points)).reshape(-1, 2)
                pairs.append(('u', u_h, u_ref))
                if postprocessed is not None:
                    pairs.append(('u_star', postprocessed[key].evaluate(mesh, rule.points), u_ref))
            if p is not None:
                pairs.append(('p', p_h, np.asarray(p(rule.points)).reshape(-1)))
            if L is not None:
                pairs.append(('L', L_h, np.asarray(L(rule.points)).reshape(-1, 4)))
            for name, approx, ref in pairs:
                difference = (approx - ref).reshape(len(rule), -1)
                squared[name] = squared.get(name, 0.) + float(np.sum(rule.weights[:, None] * difference ** 2))
    return {name: math.sqrt(value) for name, value in squared.items()}
