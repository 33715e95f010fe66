# -*- coding: utf-8 -*-
"""Global HDG system: assembly of the condensed contributions, solve and recovery.

The global unknowns are the hybrid velocity coefficients g, one mean pressure
rho_P per local problem closed by the mean pressure row and, when no local
problem touches a Neumann boundary, one multiplier fixing the mean pressure of
the whole domain

    sum_P |Omega_P| rho_P = p_ref sum_P |Omega_P|.

Without any velocity data, as in a fully periodic cell, two more multipliers
fix the skeleton mean of the hybrid velocity.
"""
import time
import warnings
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy import ndarray
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve, eigsh, MatrixRankWarning

from .cut_classification import CutTopology
from .hdg_local import PhysicsParams, BoundaryData, HybridDofMap, LocalOperator, SchurContribution, \
    FieldCoefficients, FieldKey, assemble_local_patch, condense
from .nefem_quadrature import CutQuadrature
from .utils import SingularSystemError, TopologyError

DENSE_LIMIT = 4000
RESIDUAL_TOLERANCE = 1e-10
KERNEL_TOLERANCE = 1e-10


class GlobalSystem:
    """Condensed system over the hybrid unknowns and the mean pressures.

    Attributes
    ----------
    matrix: scipy.sparse.csr_matrix
        Symmetric global matrix.
    rhs: np.ndarray[float]
    n_hybrid: int
        Number of hybrid velocity coefficients; they come first.
    rho_index: Dict[int, int]
        Index of a local problem in `operators` -> row of its mean pressure.
    mean_index: int or None
        Row of the global mean pressure multiplier.
    mean_pressure: float
        p_ref of the mean pressure constraint.
    velocity_index: List[int] or None
        Rows of the two multipliers fixing the mean hybrid velocity.
    operators: List[LocalOperator]
    contributions: List[SchurContribution]
    """

    def __init__(self, matrix: sp.csr_matrix, rhs: ndarray, n_hybrid: int, rho_index: Dict[int, int],
                 mean_index: Optional[int], mean_pressure: float, operators: List[LocalOperator],
                 contributions: List[SchurContribution], velocity_index: Optional[List[int]] = None):
        self.matrix = matrix
        self.rhs = rhs
        self.n_hybrid = n_hybrid
        self.rho_index = rho_index
        self.mean_index = mean_index
        self.mean_pressure = mean_pressure
        self.operators = operators
        self.contributions = contributions
        self.velocity_index = velocity_index
        self.residual = None

    @property
    def dimension(self) -> int:
        return len(self.rhs)

    @property
    def has_mean_constraint(self) -> bool:
        return self.mean_index is not None

    def split(self, unknowns: ndarray) -> Tuple[ndarray, Dict[int, float], float]:
        """(hybrid values, rho per local problem, mean multiplier) of a global vector."""
        rho = {i: float(unknowns[row]) for i, row in self.rho_index.items()}
        multiplier = float(unknowns[self.mean_index]) if self.has_mean_constraint else 0.
        return unknowns[:self.n_hybrid], rho, multiplier


def assemble_global(operators: Sequence[LocalOperator], contributions: Sequence[SchurContribution], n_hybrid: int,
                    mean_pressure: Optional[float] = 0., velocity_means: Optional[ndarray] = None,
                    mean_velocity: Optional[ndarray] = None) -> GlobalSystem:
    """Sum the condensed contributions into the global system.

    Parameters
    ----------
    operators: Sequence[LocalOperator]
    contributions: Sequence[SchurContribution]
        condense(local) for every local problem, in the same order.
    n_hybrid: int
        Number of hybrid coefficients of the dof map.
    mean_pressure: float or None
        p_ref of the global mean pressure constraint, which is added only when
        every local problem carries its mean pressure row. None leaves it out.
    velocity_means: 2 x n_hybrid np.ndarray[float], optional
        Skeleton means of the velocity components, see
        HybridDofMap.velocity_means; with mean_velocity they close the
        constant velocity mode of a domain without velocity data.
    mean_velocity: np.ndarray[float], optional
    """
    operators, contributions = list(operators), list(contributions)
    rho_index, n = {}, n_hybrid
    for i, contribution in enumerate(contributions):
        if contribution.has_rho:
            rho_index[i] = n
            n += 1
    mean_index = None
    if mean_pressure is not None and operators and len(rho_index) == len(operators):
        mean_index = n
        n += 1
    velocity_index = None
    if mean_velocity is not None:
        velocity_index = [n, n + 1]
        n += 2

    rows, cols, values = [], [], []
    rhs = np.zeros(n)

    def add(r, c, v):
        rr, cc = np.meshgrid(r, c, indexing='ij')
        rows.append(rr.ravel())
        cols.append(cc.ravel())
        values.append(np.asarray(v).ravel())

    for i, contribution in enumerate(contributions):
        dofs = contribution.hybrid_dofs
        add(dofs, dofs, contribution.matrix)
        rhs[dofs] += contribution.rhs
        if contribution.has_rho:
            r = rho_index[i]
            add(dofs, [r], contribution.rho_column[:, None])
            add([r], dofs, contribution.rho_column[None, :])
            add([r], [r], [[contribution.rho_diagonal]])
            rhs[r] += contribution.rho_rhs
    if mean_index is not None:
        areas = np.array([operators[i].area for i in rho_index])
        index = np.array(list(rho_index.values()))
        add(index, [mean_index], areas[:, None])
        add([mean_index], index, areas[None, :])
        rhs[mean_index] = mean_pressure * np.sum(areas)
    if velocity_index is not None:
        hybrid = np.arange(n_hybrid)
        for a, row in enumerate(velocity_index):
            add(hybrid, [row], velocity_means[a][:, None])
            add([row], hybrid, velocity_means[a][None, :])
            rhs[row] = mean_velocity[a]

    if rows:
        matrix = sp.coo_matrix((np.concatenate(values), (np.concatenate(rows), np.concatenate(cols))),
                               shape=(n, n)).tocsr()
    else:
        matrix = sp.csr_matrix((n, n))
    return GlobalSystem(matrix, rhs, n_hybrid, rho_index, mean_index,
                        0. if mean_pressure is None else float(mean_pressure), operators, contributions, velocity_index)


def kernel_dimension(matrix: Union[ndarray, sp.spmatrix], tol: float = KERNEL_TOLERANCE) -> int:
    """Number of singular values below tol times the largest one.

    >>> kernel_dimension(np.diag([1., 2., 0.]))
    1
    """
    dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
    s = np.linalg.svd(dense, compute_uv=False)
    if len(s) == 0 or s[0] == 0.:
        return len(s)
    return int(np.sum(s < tol * s[0]))


def condition_number(matrix: Union[ndarray, sp.spmatrix]) -> float:
    """Euclidean condition number of a local or global matrix.

    Matrices up to DENSE_LIMIT unknowns use the full singular value
    decomposition; larger symmetric ones use the extremal eigenvalues.

    >>> condition_number(np.eye(3))
    1.0
    """
    n = matrix.shape[0]
    if n <= DENSE_LIMIT:
        dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
        s = np.linalg.svd(dense, compute_uv=False)
        return np.inf if s[-1] == 0. else float(s[0] / s[-1])
    matrix = sp.csc_matrix(matrix)
    largest = abs(eigsh(matrix, k=1, which='LM', return_eigenvectors=False)[0])
    smallest = abs(eigsh(matrix, k=1, sigma=0., which='LM', return_eigenvectors=False)[0])
    return np.inf if smallest == 0. else float(largest / smallest)


def solve(system: GlobalSystem) -> ndarray:
    """Direct sparse solve of the global system.

    Raises
    ------
    SingularSystemError
        If the factorization fails or the relative residual exceeds
        RESIDUAL_TOLERANCE; the kernel dimension is reported for systems up to
        DENSE_LIMIT unknowns.
    """
    if system.dimension == 0:
        system.residual = 0.
        return np.zeros(0)
    with warnings.catch_warnings():
        warnings.simplefilter('error', MatrixRankWarning)
        try:
            unknowns = np.atleast_1d(spsolve(sp.csc_matrix(system.matrix), system.rhs))
        except (MatrixRankWarning, RuntimeError) as err:
            raise SingularSystemError(f'Global system is singular ({err})', _kernel_or_none(system))
    norm = np.linalg.norm(system.rhs)
    residual = np.linalg.norm(system.matrix @ unknowns - system.rhs)
    system.residual = float(residual / norm) if norm > 0 else float(residual)
    if not np.all(np.isfinite(unknowns)) or system.residual > RESIDUAL_TOLERANCE:
        raise SingularSystemError(f'Global solve failed with relative residual {system.residual:.3e}',
                                  _kernel_or_none(system))
    return unknowns


def _kernel_or_none(system: GlobalSystem) -> Optional[int]:
    if system.dimension > DENSE_LIMIT:
        return None
    return kernel_dimension(system.matrix)


def recover_fields(system: GlobalSystem, unknowns: ndarray) -> Dict[FieldKey, FieldCoefficients]:
    """Back substitute the global solution into every local problem."""
    hybrid, rho, _ = system.split(unknowns)
    fields = {}
    for i, local in enumerate(system.operators):
        x = local.solve(hybrid[local.hybrid_dofs], rho.get(i, 0.))
        fields.update(local.unpack(x))
    return fields


def monolithic_solve(system: GlobalSystem) -> Tuple[ndarray, Dict[FieldKey, FieldCoefficients]]:
    """Solve the local and global equations jointly, without condensation.

    The saddle point matrix is assembled densely, so this is meant for small
    meshes only.

    Returns
    -------
    unknowns: np.ndarray[float]
        Global unknowns ordered as in `system`.
    fields: Dict[FieldKey, FieldCoefficients]
    """
    offsets, n = [], system.dimension
    for local in system.operators:
        offsets.append(n)
        n += local.dimension
    matrix = np.zeros((n, n))
    rhs = np.zeros(n)
    for i, (local, offset) in enumerate(zip(system.operators, offsets)):
        x = slice(offset, offset + local.dimension)
        g = local.hybrid_dofs
        matrix[x, x] = local.matrix
        matrix[x, g] -= local.coupling
        matrix[g, x] -= local.coupling.T
        matrix[np.ix_(g, g)] += local.hybrid_mass
        rhs[x] = local.rhs
        if i in system.rho_index:
            r = system.rho_index[i]
            matrix[x, r] -= local.closure_column
            matrix[r, x] -= local.closure_column
    if system.has_mean_constraint:
        m = system.mean_index
        for i, r in system.rho_index.items():
            matrix[r, m] = matrix[m, r] = system.operators[i].area
        rhs[m] = system.rhs[m]
    if system.velocity_index is not None:
        rows = system.velocity_index
        matrix[np.ix_(rows, range(system.dimension))] = system.matrix[rows].toarray()
        matrix[np.ix_(range(system.dimension), rows)] = system.matrix[:, rows].toarray()
        rhs[rows] = system.rhs[rows]
    solution = scipy.linalg.solve(matrix, rhs, assume_a='sym')
    fields = {}
    for local, offset in zip(system.operators, offsets):
        fields.update(local.unpack(solution[offset:offset + local.dimension]))
    return solution[:system.dimension], fields


class Solution:
    """Result of a Stokes solve.

    Attributes
    ----------
    topology: CutTopology
    quadrature: CutQuadrature
    dofmap: HybridDofMap
    params: PhysicsParams
    bc: BoundaryData
    system: GlobalSystem
    unknowns: np.ndarray[float]
        Global solution, see GlobalSystem.split.
    fields: Dict[Tuple[int, int], FieldCoefficients]
        (host element, fluid) -> recovered coefficients.
    timings: Dict[str, float]
        Wall clock seconds per stage.
    """

    def __init__(self, topology: CutTopology, quadrature: CutQuadrature, dofmap: HybridDofMap,
                 params: PhysicsParams, bc: BoundaryData, system: GlobalSystem, unknowns: ndarray,
                 fields: Dict[FieldKey, FieldCoefficients], timings: Dict[str, float]):
        self.topology = topology
        self.quadrature = quadrature
        self.dofmap = dofmap
        self.params = params
        self.bc = bc
        self.system = system
        self.unknowns = unknowns
        self.fields = fields
        self.timings = timings

    @property
    def hybrid(self) -> ndarray:
        return self.unknowns[:self.system.n_hybrid]

    @property
    def operators(self) -> List[LocalOperator]:
        return self.system.operators

    @property
    def degrees(self) -> ndarray:
        return self.dofmap.degrees

    def field(self, element: int, label: int) -> FieldCoefficients:
        """Coefficients approximating fluid label inside element."""
        key = (self.topology.field_host(element, label), label)
        if key not in self.fields:
            raise TopologyError(f'Element {element} holds no field of fluid {label}')
        return self.fields[key]

    def local_of(self, element: int) -> LocalOperator:
        for local in self.operators:
            if element in local.patch:
                return local
        raise TopologyError(f'Element {element} is not active')

    def local_condition_numbers(self) -> List[float]:
        return [local.condition_number() for local in self.operators]

    def global_condition_number(self) -> float:
        return condition_number(self.system.matrix)

    @property
    def n_dofs(self) -> Dict[str, int]:
        return {'hybrid': self.system.n_hybrid, 'global': self.system.dimension,
                'local': int(sum(local.dimension for local in self.operators)),
                'max_local': int(max((local.dimension for local in self.operators), default=0))}


def evaluate_field(solution: Solution, cell: int, label: int, points: ndarray) -> Tuple[ndarray, ndarray, ndarray]:
    """(L, u, p) of fluid label at points of cell, shapes n x 4, n x 2 and n."""
    return solution.field(cell, label).evaluate(solution.topology.mesh, np.atleast_2d(points))


def solve_stokes(topology: CutTopology, degrees: Union[int, Sequence[int]], params: PhysicsParams,
                 bc: BoundaryData, face_basis: str = 'legendre', mean_pressure: Optional[float] = 0.,
                 quadrature: Optional[CutQuadrature] = None, verbosity: int = 0) -> Solution:
    """Assemble, condense, solve and recover the Stokes problem on a cut topology.

    Parameters
    ----------
    topology: CutTopology
    degrees: int or Sequence[int]
        Uniform degree or one degree per element.
    params: PhysicsParams
    bc: BoundaryData
    face_basis: str
        'legendre' or 'lagrange'.
    mean_pressure: float or None
        Mean pressure imposed when no boundary carries Neumann data.
    quadrature: CutQuadrature, optional
        Reused between solves on the same topology.
    verbosity: int
    """
    timings = {}
    start = time.perf_counter()
    quadrature = quadrature or CutQuadrature(topology)
    dofmap = HybridDofMap(topology, degrees, face_basis)
    operators = [assemble_local_patch(topology, quadrature, dofmap, params, bc, patch)
              for patch in topology.patches()]
    timings['assembly'] = time.perf_counter() - start

    start = time.perf_counter()
    contributions = [condense(local) for local in operators]
    means = None if bc.mean_velocity is None else dofmap.velocity_means()
    system = assemble_global(operators, contributions, dofmap.n_dofs, mean_pressure, means, bc.mean_velocity)
    timings['condensation'] = time.perf_counter() - start
    if verbosity > 0:
        print(f'Assembled {len(operators)} local problems (largest {max(op.dimension for op in operators)}), '
              f'global system of size {system.dimension}')

    start = time.perf_counter()
    unknowns = solve(system)
    timings['solve'] = time.perf_counter() - start

    start = time.perf_counter()
    fields = recover_fields(system, unknowns)
    timings['recovery'] = time.perf_counter() - start
    if verbosity > 0:
        print(f'Solved with relative residual {system.residual:.3e} in {sum(timings.values()):.2f}s')
    return Solution(topology, quadrature, dofmap, params, bc, system, unknowns, fields, timings)
