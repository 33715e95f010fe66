# -*- coding: utf-8 -*-
"""Local HDG problems of the unfitted Stokes solver and their static condensation.

A local problem is solved on a patch of elements joined by extension. The
patch holds one field (L, u, p) per (host element, fluid); a field uses the
tensor basis of its host element and is integrated over the fluid regions of
every element it covers.

The unknowns of a field are ordered L_00, L_01, L_10, L_11, u_0, u_1, p, each
block holding the N = (k+1)^2 nodal coefficients. A patch without Neumann
contact carries one more unknown, the multiplier of the mean pressure row

    (1 / |Omega_P|) sum_i (p^i, 1) = rho_P.

The local equations read A x = f + B g + E rho, where g are the hybrid
velocity coefficients seen by the patch. The transmission conditions are
B^T x - H g = 0 and the compatibility condition is E^T x = 0, i.e. the
multiplier, which equals the net velocity flux through the patch boundary,
vanishes.
"""
import warnings
from typing import Dict, List, Optional, Sequence, Tuple, Callable, Union

import numpy as np
from numpy import ndarray
from scipy.linalg import lu_factor, lu_solve, LinAlgWarning

from .bases import element_basis, face_basis, K_MIN, K_MAX
from .cartesian_mesh import CartesianMesh, SIDES, OUTWARD_NORMALS, face_sides
from .cut_classification import CutTopology
from .nefem_quadrature import CutQuadrature, LineRule, face_rule
from .utils import AssemblyError, ConfigError, TopologyError

N_COMPONENTS = 7
L_COMPONENTS = ((0, 0), (0, 1), (1, 0), (1, 1))
U_COMPONENTS = (4, 5)
P_COMPONENT = 6

DIRICHLET_ROLES = ('boundary-Dirichlet', 'wall')

FieldKey = Tuple[int, int]


class PhysicsParams:
    """Material and discretization constants of the Stokes problem.

    Attributes
    ----------
    mu1, mu2: float
        Dynamic viscosities of fluid 1 and 2; mu2 defaults to mu1.
    gamma: float
        Surface tension coefficient.
    source: callable
        s(points) -> n x 2 body force, None for no source.
    ell: float
        Characteristic length entering tau.
    c_tau: float
        Scaling of the trace stabilization tau = c_tau max(mu1, mu2) / ell.
    eta: float
        Nitsche constant of the immersed Dirichlet penalty eta / h_e.
    """

    def __init__(self, mu1: float = 1., mu2: Optional[float] = None, gamma: float = 0.,
                 source: Optional[Callable[[ndarray], ndarray]] = None, ell: float = 1., c_tau: float = 3.,
                 eta: float = 10.):
        self.mu1 = float(mu1)
        self.mu2 = float(mu1 if mu2 is None else mu2)
        self.gamma = float(gamma)
        self.source = source
        self.ell = float(ell)
        self.c_tau = float(c_tau)
        self.eta = float(eta)
        if self.mu1 <= 0 or self.mu2 <= 0:
            raise ConfigError(f'Viscosities must be positive, got {self.mu1}, {self.mu2}')
        if self.ell <= 0 or self.eta <= 0 or self.c_tau <= 0:
            raise ConfigError(f'ell, eta and c_tau must be positive, got {self.ell}, {self.eta}, {self.c_tau}')

    def mu(self, label: int) -> float:
        return self.mu1 if label == 1 else self.mu2

    def sqrt_mu(self, label: int) -> float:
        return float(np.sqrt(self.mu(label)))

    @property
    def tau(self) -> float:
        return self.c_tau * max(self.mu1, self.mu2) / self.ell

    def source_values(self, points: ndarray) -> ndarray:
        if self.source is None:
            return np.zeros((len(points), 2))
        return np.asarray(self.source(points), dtype=float).reshape(len(points), 2)


class BoundaryData:
    """Boundary conditions of a case.

    Attributes
    ----------
    dirichlet: callable
        u_D(points) -> n x 2, used on 'boundary-Dirichlet' curves and fitted
        Dirichlet faces; 'wall' curves are no-slip.
    traction: callable
        t(points, normals) -> n x 2 on Neumann curves and faces.
    neumann_sides: Tuple[str]
        Sides of the active box ('bottom', 'right', 'top', 'left') whose
        fitted faces carry the traction instead of u_D.
    mean_velocity: np.ndarray[float] or None
        Mean of the hybrid velocity over the skeleton, imposed when no
        boundary carries velocity data, as in a fully periodic cell.
    """

    def __init__(self, dirichlet: Optional[Callable[[ndarray], ndarray]] = None,
                 traction: Optional[Callable[[ndarray, ndarray], ndarray]] = None,
                 neumann_sides: Sequence[str] = (), mean_velocity: Optional[Sequence[float]] = None):
        unknown = set(neumann_sides) - set(SIDES)
        if unknown:
            raise ConfigError(f'Unknown value for Neumann side, {sorted(unknown)}')
        self.dirichlet = dirichlet
        self.traction = traction
        self.neumann_sides = tuple(neumann_sides)
        self.mean_velocity = None if mean_velocity is None else np.asarray(mean_velocity, dtype=float).reshape(2)

    def velocity(self, points: ndarray, role: str = 'boundary-Dirichlet') -> ndarray:
        if role == 'wall' or self.dirichlet is None:
            return np.zeros((len(points), 2))
        return np.asarray(self.dirichlet(points), dtype=float).reshape(len(points), 2)

    def traction_values(self, points: ndarray, normals: ndarray) -> ndarray:
        if self.traction is None:
            return np.zeros((len(points), 2))
        return np.asarray(self.traction(points, normals), dtype=float).reshape(len(points), 2)


def element_degrees(topology: CutTopology, degrees: Union[int, Sequence[int]]) -> ndarray:
    """Per element polynomial degrees from a uniform degree or a sequence."""
    if np.isscalar(degrees):
        degrees = np.full(topology.n_elements, int(degrees))
    degrees = np.asarray(degrees, dtype=int)
    if degrees.shape != (topology.n_elements,):
        raise ConfigError(f'Expected {topology.n_elements} element degrees, got shape {degrees.shape}')
    if np.any(degrees < K_MIN) or np.any(degrees > K_MAX):
        raise ConfigError(f'Element degrees must lie in [{K_MIN}, {K_MAX}]')
    return degrees


class HybridPortion:
    """A face portion of one fluid carrying hybrid velocity coefficients.

    The two velocity components use the face basis of the given degree on the
    full face coordinate, restricted to [t0, t1].
    """

    def __init__(self, face: int, label: int, t0: float, t1: float, degree: int, offset: int):
        self.face = face
        self.label = label
        self.t0 = t0
        self.t1 = t1
        self.degree = degree
        self.offset = offset

    @property
    def dimension(self) -> int:
        return 2 * (self.degree + 1)

    @property
    def dofs(self) -> ndarray:
        return np.arange(self.offset, self.offset + self.dimension)

    def __repr__(self):
        return f'HybridPortion(face={self.face}, label={self.label}, t=[{self.t0:.6g}, {self.t1:.6g}])'


class HybridDofMap:
    """Numbering of the hybrid velocity coefficients over the skeleton.

    Attributes
    ----------
    topology: CutTopology
    degrees: np.ndarray[int]
        Element degrees; a face takes the largest degree of the fields on
        its two sides.
    face_basis_kind: str
    portions: List[HybridPortion]
    n_dofs: int
    """

    def __init__(self, topology: CutTopology, degrees: Union[int, Sequence[int]],
                 face_basis_kind: str = 'legendre'):
        self.topology = topology
        self.degrees = element_degrees(topology, degrees)
        self.face_basis_kind = face_basis_kind
        self.portions = []
        self._lookup = {}
        offset = 0
        for (f, label), intervals in sorted(topology.hybrid_portions().items()):
            owner, other = face_sides(topology.mesh, f, topology.pairing)
            degree = int(max(self.degrees[topology.field_host(owner, label)],
                             self.degrees[topology.field_host(other, label)]))
            for t0, t1 in intervals:
                portion = HybridPortion(f, label, t0, t1, degree, offset)
                self.portions.append(portion)
                self._lookup[(f, label, round(t0, 12))] = portion
                offset += portion.dimension
        self.n_dofs = offset

    def find(self, face: int, label: int, t0: float) -> Optional[HybridPortion]:
        return self._lookup.get((face, label, round(t0, 12)))

    def basis(self, portion: HybridPortion):
        return face_basis(self.face_basis_kind, portion.degree)

    def values(self, portion: HybridPortion, t: ndarray) -> ndarray:
        """Face basis of a portion at face coordinates t."""
        return self.basis(portion).values(t, portion.t0, portion.t1)

    def evaluate(self, values: ndarray, portion: HybridPortion, t: ndarray) -> ndarray:
        """Hybrid velocity of a portion at face coordinates t, shape len(t) x 2."""
        psi = self.values(portion, t)
        coefficients = values[portion.dofs].reshape(2, -1)
        return psi @ coefficients.T

    def velocity_means(self) -> ndarray:
        """Rows mapping the hybrid coefficients to the skeleton mean of each velocity component, 2 x n_dofs."""
        means = np.zeros((2, self.n_dofs))
        mesh, length = self.topology.mesh, 0.
        for portion in self.portions:
            rule = face_rule(mesh, portion.face, portion.t0, portion.t1, portion.degree + 1)
            integrals = self.values(portion, rule.params).T @ rule.weights
            dofs = portion.dofs.reshape(2, -1)
            means[0, dofs[0]] += integrals
            means[1, dofs[1]] += integrals
            length += np.sum(rule.weights)
        return means / length if length > 0. else means

    def project(self, function: Callable[[ndarray], ndarray]) -> ndarray:
        """L2 projection of a velocity field onto every portion."""
        values = np.zeros(self.n_dofs)
        mesh = self.topology.mesh
        for portion in self.portions:
            rule = face_rule(mesh, portion.face, portion.t0, portion.t1, portion.degree + 3)
            psi = self.values(portion, rule.params)
            mass = psi.T @ (rule.weights[:, None] * psi)
            data = np.asarray(function(rule.points), dtype=float).reshape(-1, 2)
            coefficients = np.linalg.solve(mass, psi.T @ (rule.weights[:, None] * data))
            values[portion.dofs] = coefficients.T.ravel()
        return values


class FieldCoefficients:
    """Nodal coefficients of (L, u, p) of one field.

    Attributes
    ----------
    host: int
    label: int
    degree: int
    L: 4 x N np.ndarray[float]
        Rows L_00, L_01, L_10, L_11.
    u: 2 x N np.ndarray[float]
    p: N np.ndarray[float]
    """

    def __init__(self, host: int, label: int, degree: int, L: ndarray, u: ndarray, p: ndarray):
        self.host = host
        self.label = label
        self.degree = degree
        self.L = L
        self.u = u
        self.p = p

    @classmethod
    def from_functions(cls, mesh: CartesianMesh, host: int, label: int, degree: int,
                       u: Callable[[ndarray], ndarray], p: Callable[[ndarray], ndarray],
                       L: Optional[Callable[[ndarray], ndarray]] = None) -> 'FieldCoefficients':
        """Nodal interpolation of given fields in the basis of host."""
        basis = element_basis(degree)
        x0, y0, _, _ = mesh.element_bounds(host)
        nodes = (x0, y0) + 0.5 * (basis.nodes + 1.) * mesh.h
        u_values = np.asarray(u(nodes), dtype=float).reshape(-1, 2)
        p_values = np.asarray(p(nodes), dtype=float).reshape(-1)
        L_values = np.zeros((len(nodes), 4)) if L is None else np.asarray(L(nodes), dtype=float).reshape(-1, 4)
        return cls(host, label, degree, L_values.T.copy(), u_values.T.copy(), p_values.copy())

    def evaluate(self, mesh: CartesianMesh, points: ndarray) -> Tuple[ndarray, ndarray, ndarray]:
        """(L, u, p) at points, shapes n x 4, n x 2 and n."""
        phi = element_basis(self.degree).values(mesh.to_reference(self.host, points))
        return phi @ self.L.T, phi @ self.u.T, phi @ self.p


def basis_at(mesh: CartesianMesh, host: int, degree: int, points: ndarray) -> Tuple[ndarray, ndarray, ndarray]:
    """Values and physical x, y derivatives of the basis of host at points."""
    basis = element_basis(degree)
    ref = mesh.to_reference(host, points)
    d_xi, d_eta = basis.gradients(ref)
    return basis.values(ref), d_xi * (2. / mesh.h[0]), d_eta * (2. / mesh.h[1])


class LocalOperator:
    """Local problem of one patch.

    Attributes
    ----------
    patch: List[int]
        Elements of the patch.
    classification: str
        'standard', 'immersed_boundary' or 'interface'.
    fields: List[Tuple[int, int]]
        (host element, fluid) of every field.
    degrees: Dict[Tuple[int, int], int]
    offsets: Dict[Tuple[int, int], int]
    portions: List[HybridPortion]
        Hybrid portions seen by the patch, in local order.
    matrix: np.ndarray[float]
        A, symmetric.
    rhs: np.ndarray[float]
        f.
    coupling: np.ndarray[float]
        B, one column per local hybrid coefficient.
    hybrid_mass: np.ndarray[float]
        H = <w_hat, tau u_hat> over the patch side of its portions.
    has_closure: bool
        True when the mean pressure row is present (no Neumann contact).
    area: float
        Fluid area of the patch.
    """

    def __init__(self, patch: List[int], classification: str, fields: List[FieldKey],
                 degrees: Dict[FieldKey, int], offsets: Dict[FieldKey, int], portions: List[HybridPortion],
                 matrix: ndarray, rhs: ndarray, coupling: ndarray, hybrid_mass: ndarray, has_closure: bool,
                 area: float):
        self.patch = patch
        self.classification = classification
        self.fields = fields
        self.degrees = degrees
        self.offsets = offsets
        self.portions = portions
        self.matrix = matrix
        self.rhs = rhs
        self.coupling = coupling
        self.hybrid_mass = hybrid_mass
        self.has_closure = has_closure
        self.area = area
        self._factor = None

    @property
    def dimension(self) -> int:
        return len(self.rhs)

    @property
    def n_hybrid(self) -> int:
        return self.coupling.shape[1]

    @property
    def hybrid_dofs(self) -> ndarray:
        if not self.portions:
            return np.zeros(0, dtype=int)
        return np.concatenate([p.dofs for p in self.portions])

    @property
    def closure_column(self) -> ndarray:
        e = np.zeros(self.dimension)
        if self.has_closure:
            e[-1] = 1.
        return e

    def block(self, field: FieldKey, component: int) -> slice:
        n = element_basis(self.degrees[field]).dimension
        start = self.offsets[field] + component * n
        return slice(start, start + n)

    def condition_number(self) -> float:
        return condition_number(self.matrix)

    def factorize(self):
        if self._factor is None:
            with warnings.catch_warnings():
                warnings.simplefilter('error', LinAlgWarning)
                try:
                    self._factor = lu_factor(self.matrix)
                except (LinAlgWarning, ValueError, np.linalg.LinAlgError) as err:
                    raise AssemblyError(f'Singular local matrix ({err})', self.patch)
            if not np.all(np.isfinite(self._factor[0])):
                raise AssemblyError('Local matrix factorization is not finite', self.patch)
        return self._factor

    def solve(self, hybrid: ndarray, rho: float = 0.) -> ndarray:
        """Local unknowns x = A^-1 (f + B g + E rho) for the local hybrid values g."""
        return lu_solve(self.factorize(), self.rhs + self.coupling @ hybrid + rho * self.closure_column)

    def residual(self, x: ndarray, hybrid: ndarray, rho: float = 0.) -> ndarray:
        return self.matrix @ x - self.rhs - self.coupling @ hybrid - rho * self.closure_column

    def unpack(self, x: ndarray) -> Dict[FieldKey, FieldCoefficients]:
        result = {}
        for field in self.fields:
            blocks = [x[self.block(field, c)] for c in range(N_COMPONENTS)]
            result[field] = FieldCoefficients(field[0], field[1], self.degrees[field], np.array(blocks[:4]),
                                              np.array(blocks[4:6]), blocks[6].copy())
        return result

    def pack(self, coefficients: Dict[FieldKey, FieldCoefficients], multiplier: float = 0.) -> ndarray:
        x = np.zeros(self.dimension)
        for field in self.fields:
            c = coefficients[field]
            for i in range(4):
                x[self.block(field, i)] = c.L[i]
            for i in range(2):
                x[self.block(field, U_COMPONENTS[i])] = c.u[i]
            x[self.block(field, P_COMPONENT)] = c.p
        if self.has_closure:
            x[-1] = multiplier
        return x


class SchurContribution:
    """Condensed contribution of one local problem to the global system.

    Attributes
    ----------
    hybrid_dofs: np.ndarray[int]
        Global hybrid indices of the rows and columns.
    matrix: np.ndarray[float]
        H - B^T A^-1 B.
    rhs: np.ndarray[float]
        B^T A^-1 f.
    rho_column: np.ndarray[float] or None
        -B^T A^-1 E, coupling to the patch mean pressure.
    rho_diagonal: float
    rho_rhs: float
        E^T A^-1 f.
    """

    def __init__(self, hybrid_dofs: ndarray, matrix: ndarray, rhs: ndarray, rho_column: Optional[ndarray] = None,
                 rho_diagonal: float = 0., rho_rhs: float = 0.):
        self.hybrid_dofs = hybrid_dofs
        self.matrix = matrix
        self.rhs = rhs
        self.rho_column = rho_column
        self.rho_diagonal = rho_diagonal
        self.rho_rhs = rho_rhs

    @property
    def has_rho(self) -> bool:
        return self.rho_column is not None


def condition_number(matrix: ndarray) -> float:
    """Euclidean condition number as the ratio of extreme singular values.

    >>> condition_number(np.diag([1., 1e6]))
    1000000.0
    """
    s = np.linalg.svd(np.atleast_2d(matrix), compute_uv=False)
    if s[-1] == 0.:
        return np.inf
    return float(s[0] / s[-1])


def condense(local: LocalOperator) -> SchurContribution:
    """Eliminate (L, u, p) and the local multiplier in favour of the hybrid values and rho."""
    factor = local.factorize()
    n_g = local.n_hybrid
    columns = np.column_stack((local.coupling, local.rhs, local.closure_column))
    solved = lu_solve(factor, columns)
    a_inv_b, a_inv_f, a_inv_e = solved[:, :n_g], solved[:, n_g], solved[:, n_g + 1]
    b_t = local.coupling.T
    matrix = local.hybrid_mass - b_t @ a_inv_b
    rhs = b_t @ a_inv_f
    if not local.has_closure:
        return SchurContribution(local.hybrid_dofs, matrix, rhs)
    e = local.closure_column
    return SchurContribution(local.hybrid_dofs, matrix, rhs, -b_t @ a_inv_e, -float(e @ a_inv_e),
                             float(e @ a_inv_f))


def element_face_terms(topology: CutTopology, dofmap: Optional[HybridDofMap], neumann_sides: Sequence[str],
                       e: int, label: int):
    """Fluid portions on the sides of element e entering its local problem.

    Yields (side, physical face, t0, t1, kind, portion) with kind 'hybrid',
    'dirichlet' or 'neumann'. Portions shared with an active element of the
    same field are skipped. Without a dof map, hybrid portions come with
    portion None.
    """
    faces = topology.mesh.element_faces(e)
    host = topology.field_host(e, label)
    for side, f, nb in topology.face_neighbors(e):
        for t0, t1, lab in topology.face_portions.get(f, []):
            if lab != label:
                continue
            if topology.is_active(nb):
                if nb != e and topology.field_host(nb, label) == host:
                    continue
                portion = None if dofmap is None else dofmap.find(f, label, t0)
                if dofmap is not None and portion is None:
                    raise TopologyError(f'Face {f} of element {e} has no hybrid unknowns for fluid {label}')
                yield side, faces[side], t0, t1, 'hybrid', portion
            else:
                kind = 'neumann' if SIDES[side] in neumann_sides else 'dirichlet'
                yield side, faces[side], t0, t1, kind, None


class _PatchAssembler:
    """Accumulates the blocks of one local problem."""

    def __init__(self, topology: CutTopology, quadrature: CutQuadrature, dofmap: HybridDofMap,
                 params: PhysicsParams, bc: BoundaryData, patch: List[int]):
        self.topology = topology
        self.mesh = topology.mesh
        self.quadrature = quadrature
        self.dofmap = dofmap
        self.params = params
        self.bc = bc
        self.patch = sorted(patch)
        self.fields = sorted({(topology.field_host(e, label), label) for e in self.patch
                              for label in topology.labels(e)})
        if not self.fields:
            raise TopologyError(f'Patch {self.patch} holds no fluid region')
        self.degrees = {f: int(dofmap.degrees[f[0]]) for f in self.fields}
        self.offsets, n = {}, 0
        for f in self.fields:
            self.offsets[f] = n
            n += N_COMPONENTS * element_basis(self.degrees[f]).dimension
        self.n_field_unknowns = n
        self.has_closure = not self._touches_neumann()
        self.portions = self._collect_portions()
        self.local_offsets, m = {}, 0
        for portion in self.portions:
            self.local_offsets[portion.offset] = m
            m += portion.dimension
        size = n + (1 if self.has_closure else 0)
        self.matrix = np.zeros((size, size))
        self.rhs = np.zeros(size)
        self.coupling = np.zeros((size, m))
        self.hybrid_mass = np.zeros((m, m))
        self.closure = np.zeros(size)
        self.area = 0.

    def block(self, field: FieldKey, component: int) -> slice:
        n = element_basis(self.degrees[field]).dimension
        start = self.offsets[field] + component * n
        return slice(start, start + n)

    def hybrid_block(self, portion: HybridPortion, component: int) -> slice:
        n = portion.degree + 1
        start = self.local_offsets[portion.offset] + component * n
        return slice(start, start + n)

    def field_of(self, e: int, label: int) -> FieldKey:
        return self.topology.field_host(e, label), label

    def face_terms(self, e: int, label: int):
        return element_face_terms(self.topology, self.dofmap, self.bc.neumann_sides, e, label)

    def _touches_neumann(self) -> bool:
        for e in self.patch:
            cell = self.topology.cells[e]
            if any(seg.curve.role == 'boundary-Neumann' for seg in cell.segments):
                return True
            for label in self.topology.labels(e):
                if any(term[4] == 'neumann' for term in element_face_terms(self.topology, None,
                                                                           self.bc.neumann_sides, e, label)):
                    return True
        return False

    def _collect_portions(self) -> List[HybridPortion]:
        found = {}
        for e in self.patch:
            for label in self.topology.labels(e):
                for term in self.face_terms(e, label):
                    if term[5] is not None:
                        found[term[5].offset] = term[5]
        return [found[k] for k in sorted(found)]

    # -- volume terms
    def volume(self, e: int, label: int) -> None:
        field = self.field_of(e, label)
        k = self.degrees[field]
        rule = self.quadrature.element_rule(e, label, k + 3)
        if len(rule) == 0:
            raise TopologyError(f'Region of fluid {label} in element {e} has no quadrature rule')
        self.area += rule.area
        phi, gx, gy = basis_at(self.mesh, field[0], k, rule.points)
        w = rule.weights[:, None]
        mass = phi.T @ (w * phi)
        d = (gx.T @ (w * phi), gy.T @ (w * phi))
        sqrt_mu = self.params.sqrt_mu(label)
        A = self.matrix
        for c, (a, b) in enumerate(L_COMPONENTS):
            L, u = self.block(field, c), self.block(field, U_COMPONENTS[a])
            A[L, L] -= mass
            A[L, u] += sqrt_mu * d[b]
            A[u, L] += sqrt_mu * d[b].T
        p = self.block(field, P_COMPONENT)
        source = self.params.source_values(rule.points)
        for a in range(2):
            u = self.block(field, U_COMPONENTS[a])
            A[u, p] += d[a].T
            A[p, u] += d[a]
            self.rhs[u] += phi.T @ (rule.weights * source[:, a])
        self.closure[p] += phi.T @ rule.weights

    # -- boundary terms
    def hybrid(self, field: FieldKey, rule: LineRule, portion: HybridPortion) -> None:
        k = self.degrees[field]
        phi, _, _ = basis_at(self.mesh, field[0], k, rule.points)
        psi = self.dofmap.values(portion, rule.params)
        w, n = rule.weights, rule.normals
        tau = self.params.tau
        sqrt_mu = self.params.sqrt_mu(field[1])
        phi_psi = phi.T @ (w[:, None] * psi)
        p = self.block(field, P_COMPONENT)
        for a in range(2):
            g = self.hybrid_block(portion, a)
            u = self.block(field, U_COMPONENTS[a])
            self.matrix[u, u] += tau * phi.T @ (w[:, None] * phi)
            self.coupling[u, g] += tau * phi_psi
            self.coupling[p, g] += phi.T @ ((w * n[:, a])[:, None] * psi)
            self.hybrid_mass[g, g] += tau * psi.T @ (w[:, None] * psi)
            for b in range(2):
                L = self.block(field, 2 * a + b)
                self.coupling[L, g] += sqrt_mu * phi.T @ ((w * n[:, b])[:, None] * psi)

    def dirichlet(self, field: FieldKey, rule: LineRule, velocity: ndarray, penalty: float) -> None:
        """Weak Dirichlet data; penalty is tau on fitted faces and eta / h_e on curves."""
        k = self.degrees[field]
        phi, _, _ = basis_at(self.mesh, field[0], k, rule.points)
        w, n = rule.weights, rule.normals
        sqrt_mu = self.params.sqrt_mu(field[1])
        p = self.block(field, P_COMPONENT)
        self.rhs[p] += phi.T @ (w * np.sum(velocity * n, axis=1))
        for a in range(2):
            u = self.block(field, U_COMPONENTS[a])
            self.matrix[u, u] += penalty * phi.T @ (w[:, None] * phi)
            self.rhs[u] += penalty * phi.T @ (w * velocity[:, a])
            for b in range(2):
                L = self.block(field, 2 * a + b)
                self.rhs[L] += sqrt_mu * phi.T @ (w * n[:, b] * velocity[:, a])

    def neumann(self, field: FieldKey, rule: LineRule, traction: ndarray) -> None:
        k = self.degrees[field]
        phi, _, _ = basis_at(self.mesh, field[0], k, rule.points)
        w, n = rule.weights, rule.normals
        sqrt_mu = self.params.sqrt_mu(field[1])
        p = self.block(field, P_COMPONENT)
        for a in range(2):
            u = self.block(field, U_COMPONENTS[a])
            up = phi.T @ ((w * n[:, a])[:, None] * phi)
            self.matrix[u, p] -= up
            self.matrix[p, u] -= up.T
            self.rhs[u] += phi.T @ (w * traction[:, a])
            for b in range(2):
                L = self.block(field, 2 * a + b)
                lu = sqrt_mu * phi.T @ ((w * n[:, b])[:, None] * phi)
                self.matrix[L, u] -= lu
                self.matrix[u, L] -= lu.T

    def interface(self, fields: Tuple[FieldKey, FieldKey], rule: LineRule) -> None:
        """Jump and mean couplings on the interface, normals pointing from fluid 1 to fluid 2."""
        w, n = rule.weights, rule.normals
        phis = [basis_at(self.mesh, f[0], self.degrees[f], rule.points)[0] for f in fields]
        load = self.params.gamma * rule.curvatures[:, None] * n
        for j, (field_j, sign) in enumerate(zip(fields, (1., -1.))):
            sqrt_mu = self.params.sqrt_mu(field_j[1])
            p_j = self.block(field_j, P_COMPONENT)
            for m, field_m in enumerate(fields):
                for a in range(2):
                    u_m = self.block(field_m, U_COMPONENTS[a])
                    up = -0.5 * sign * phis[m].T @ ((w * n[:, a])[:, None] * phis[j])
                    self.matrix[u_m, p_j] += up
                    self.matrix[p_j, u_m] += up.T
                    for b in range(2):
                        L_j = self.block(field_j, 2 * a + b)
                        lu = -0.5 * sign * sqrt_mu * phis[j].T @ ((w * n[:, b])[:, None] * phis[m])
                        self.matrix[L_j, u_m] += lu
                        self.matrix[u_m, L_j] += lu.T
        for field_m, phi in zip(fields, phis):
            for a in range(2):
                self.rhs[self.block(field_m, U_COMPONENTS[a])] += 0.5 * phi.T @ (w * load[:, a])

    def assemble(self) -> LocalOperator:
        mesh, topology = self.mesh, self.topology
        tau = self.params.tau
        nitsche = self.params.eta / mesh.element_size
        for e in self.patch:
            for label in topology.labels(e):
                field = self.field_of(e, label)
                k = self.degrees[field]
                self.volume(e, label)
                for side, face, t0, t1, kind, portion in self.face_terms(e, label):
                    n = max(k, portion.degree if portion is not None else k) + 3
                    rule = face_rule(mesh, face, t0, t1, n, OUTWARD_NORMALS[side])
                    if kind == 'hybrid':
                        self.hybrid(field, rule, portion)
                    elif kind == 'dirichlet':
                        self.dirichlet(field, rule, self.bc.velocity(rule.points), tau)
                    else:
                        self.neumann(field, rule, self.bc.traction_values(rule.points, rule.normals))
            self._curves(e, nitsche)
        if self.has_closure:
            if self.area <= 0:
                raise TopologyError(f'Patch {self.patch} has no fluid area')
            c = self.closure / self.area
            self.matrix[-1, :-1] = c[:-1]
            self.matrix[:-1, -1] = c[:-1]
        return LocalOperator(self.patch, self._classification(), self.fields, self.degrees, self.offsets,
                             self.portions, self.matrix, self.rhs, self.coupling, self.hybrid_mass,
                             self.has_closure, self.area)

    def _curves(self, e: int, nitsche: float) -> None:
        labels = self.topology.labels(e)
        degree = max(self.degrees[self.field_of(e, label)] for label in labels)
        for segment, rule in self.quadrature.curve_rules(e, degree + 3):
            curve = segment.curve
            if curve.is_interface:
                if labels != [1, 2]:
                    raise TopologyError(f'Interface segment in element {e} without both fluids')
                self.interface((self.field_of(e, 1), self.field_of(e, 2)), rule)
                continue
            if curve.fluid not in labels:
                raise TopologyError(f'Boundary segment in element {e} bounds fluid {curve.fluid}, '
                                    f'which is not present')
            field = self.field_of(e, curve.fluid)
            if curve.role in DIRICHLET_ROLES:
                self.dirichlet(field, rule, self.bc.velocity(rule.points, curve.role), nitsche)
            else:
                self.neumann(field, rule, self.bc.traction_values(rule.points, rule.normals))

    def _classification(self) -> str:
        kinds = {self.topology.classification(e) for e in self.patch}
        if 'interface' in kinds:
            return 'interface'
        if 'immersed_boundary' in kinds:
            return 'immersed_boundary'
        return 'standard'


def patch_of(topology: CutTopology, element: int) -> List[int]:
    """The patch of active elements joined to element by extension."""
    for patch in topology.patches():
        if element in patch:
            return patch
    raise TopologyError(f'Element {element} is not active')


def assemble_local_patch(topology: CutTopology, quadrature: CutQuadrature, dofmap: HybridDofMap,
                         params: PhysicsParams, bc: BoundaryData, patch: Sequence[int]) -> LocalOperator:
    """Assemble the local problem of a patch of any classification."""
    return _PatchAssembler(topology, quadrature, dofmap, params, bc, list(patch)).assemble()


def _assemble_checked(kind: Tuple[str, ...], element: int, topology: CutTopology, quadrature: CutQuadrature,
                      dofmap: HybridDofMap, params: PhysicsParams, bc: BoundaryData) -> LocalOperator:
    patch = patch_of(topology, element)
    if topology.classification(element) not in kind:
        raise ConfigError(f'Element {element} is {topology.classification(element)}, expected one of {kind}')
    return assemble_local_patch(topology, quadrature, dofmap, params, bc, patch)


def assemble_local_standard(element: int, topology: CutTopology, quadrature: CutQuadrature, dofmap: HybridDofMap,
                            params: PhysicsParams, bc: BoundaryData) -> LocalOperator:
    """Local problem of a standard element, possibly with fitted boundary faces."""
    return _assemble_checked(('standard',), element, topology, quadrature, dofmap, params, bc)


def assemble_local_immersed(element: int, topology: CutTopology, quadrature: CutQuadrature,
                            dofmap: HybridDofMap, params: PhysicsParams, bc: BoundaryData) -> LocalOperator:
    """Local problem of an element cut by the boundary, with Nitsche terms on Dirichlet curves.

    When the element is extended, the patch of its donor is assembled.
    """
    return _assemble_checked(('immersed_boundary',), element, topology, quadrature, dofmap, params, bc)


def assemble_local_interface(element: int, topology: CutTopology, quadrature: CutQuadrature,
                             dofmap: HybridDofMap, params: PhysicsParams,
                             bc: Optional[BoundaryData] = None) -> LocalOperator:
    """Local problem of an element cut by the interface, holding one field per fluid."""
    return _assemble_checked(('interface',), element, topology, quadrature, dofmap, params,
                             bc or BoundaryData())


def local_dimension(k: int, n_fields: int = 1, closure: bool = True) -> int:
    """Size of a local problem with n_fields fields of degree k.

    >>> [local_dimension(k) for k in (1, 2, 3, 4)]
    [29, 64, 113, 176]
    >>> [local_dimension(k, 2) for k in (1, 2, 3, 4)]
    [57, 127, 225, 351]
    """
    return N_COMPONENTS * (k + 1) ** 2 * n_fields + int(closure)
