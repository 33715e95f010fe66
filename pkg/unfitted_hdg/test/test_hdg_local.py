# -*- coding: utf-8 -*-
import numpy as np
import pytest

from ..cartesian_mesh import build_mesh
from ..cut_classification import classify
from ..hdg_local import PhysicsParams, BoundaryData, HybridDofMap, FieldCoefficients, assemble_local_patch, \
    assemble_local_standard, assemble_local_immersed, assemble_local_interface, condense, local_dimension, \
    condition_number, element_degrees
from ..nefem_quadrature import CutQuadrature
from ..nurbs_geometry import make_circle, make_line
from ..utils import ConfigError

VELOCITY = np.array([0.7, -0.4])
PRESSURE = 1.3


def constant_velocity(points):
    return np.tile(VELOCITY, (len(points), 1))


def build(curves, n=2, degree=1, extension=True, **bc):
    mesh = build_mesh((0., 0.), (1., 1.), n, n)
    topology = classify(curves, mesh, extension=extension)
    return topology, CutQuadrature(topology), HybridDofMap(topology, degree), BoundaryData(**bc)


def constant_state_residual(local, topology, dofmap):
    coefficients = {}
    for host, label in local.fields:
        coefficients[(host, label)] = FieldCoefficients.from_functions(
            topology.mesh, host, label, local.degrees[(host, label)], constant_velocity,
            lambda points: np.full(len(points), PRESSURE))
    x = local.pack(coefficients)
    hybrid = dofmap.project(constant_velocity)[local.hybrid_dofs]
    return local.residual(x, hybrid, PRESSURE)


@pytest.fixture(scope='module')
def bubble():
    return build(make_circle((0.5, 0.5), 1. / 3., role='interface'), n=4, extension=False)


@pytest.mark.parametrize('k, expected', [(1, 29), (2, 64), (3, 113), (4, 176)])
def test__assemble_local_standard__fitted_element__dimension(k, expected):
    topology, quadrature, dofmap, bc = build([], degree=k)
    local = assemble_local_standard(0, topology, quadrature, dofmap, PhysicsParams(), bc)
    assert local.dimension == expected == local_dimension(k)
    assert local.has_closure


@pytest.mark.parametrize('k, expected', [(1, 57), (2, 127), (3, 225), (4, 351)])
def test__assemble_local_interface__bubble_cell__two_fields(bubble, k, expected):
    topology, quadrature, _, _ = bubble
    dofmap = HybridDofMap(topology, k)
    e = next(c.element for c in topology.cells if c.classification == 'interface')
    local = assemble_local_interface(e, topology, quadrature, dofmap, PhysicsParams(mu2=10.))
    assert local.dimension == expected
    assert [label for _, label in local.fields] == [1, 2]


def test__assemble_local_patch__neumann_side__no_closure():
    topology, quadrature, dofmap, bc = build([], neumann_sides=('right',))
    params = PhysicsParams()
    touching = assemble_local_patch(topology, quadrature, dofmap, params, bc, [1])
    inner = assemble_local_patch(topology, quadrature, dofmap, params, bc, [0])
    assert not touching.has_closure and touching.dimension == 28
    assert inner.has_closure and inner.dimension == 29


@pytest.mark.parametrize('k', [1, 3])
def test__local_operator__fitted_constant_state__zero_residual(k):
    topology, quadrature, dofmap, bc = build([], degree=k, dirichlet=constant_velocity)
    local = assemble_local_standard(0, topology, quadrature, dofmap, PhysicsParams(mu1=2.), bc)
    assert np.max(np.abs(constant_state_residual(local, topology, dofmap))) < 1e-12


@pytest.mark.parametrize('eta', [1., 10., 1000.])
def test__local_operator__extended_straight_cut_constant_state__zero_residual_for_any_eta(eta):
    line = make_line((0., 0.501), (1., 0.501), orientation='clockwise', role='boundary-Dirichlet')
    topology, quadrature, dofmap, bc = build([line], n=4, degree=2, dirichlet=constant_velocity)
    local = assemble_local_immersed(8, topology, quadrature, dofmap, PhysicsParams(eta=eta), bc)
    assert local.patch == [4, 8]
    assert local.fields == [(4, 1)]
    assert np.max(np.abs(constant_state_residual(local, topology, dofmap))) < 1e-11


def test__local_operator__bubble_constant_state__zero_residual(bubble):
    topology, quadrature, dofmap, _ = bubble
    params = PhysicsParams(mu1=1., mu2=5.)
    for cell in topology.cells:
        if cell.classification != 'interface':
            continue
        local = assemble_local_interface(cell.element, topology, quadrature, dofmap, params,
                                         BoundaryData(dirichlet=constant_velocity))
        assert np.max(np.abs(constant_state_residual(local, topology, dofmap))) < 1e-9


def test__local_operator__immersed_patch__symmetric_matrix():
    line = make_line((0., 0.601), (1., 0.601), orientation='clockwise', role='boundary-Dirichlet')
    topology, quadrature, dofmap, bc = build([line], n=4, degree=2)
    local = assemble_local_immersed(9, topology, quadrature, dofmap, PhysicsParams(), bc)
    assert local.patch == [9]
    assert np.allclose(local.matrix, local.matrix.T, atol=1e-13)


def test__condense__fitted_element__symmetric_contribution():
    topology, quadrature, dofmap, bc = build([], degree=2)
    local = assemble_local_standard(3, topology, quadrature, dofmap, PhysicsParams(mu1=0.5), bc)
    contribution = condense(local)
    scale = np.max(np.abs(contribution.matrix))
    assert contribution.matrix.shape == (local.n_hybrid, local.n_hybrid)
    assert np.allclose(contribution.matrix, contribution.matrix.T, atol=1e-10 * scale)
    assert contribution.has_rho and contribution.rho_column.shape == (local.n_hybrid,)


def test__condense__zero_data__zero_right_hand_side():
    topology, quadrature, dofmap, bc = build([], degree=2)
    local = assemble_local_standard(0, topology, quadrature, dofmap, PhysicsParams(), bc)
    contribution = condense(local)
    assert np.all(local.rhs == 0.)
    assert np.allclose(contribution.rhs, 0.) and contribution.rho_rhs == 0.


def test__condense__recovery__satisfies_local_equations():
    topology, quadrature, dofmap, bc = build([], degree=2, dirichlet=constant_velocity)
    local = assemble_local_standard(1, topology, quadrature, dofmap, PhysicsParams(), bc)
    hybrid = np.random.RandomState(0).randn(local.n_hybrid)
    x = local.solve(hybrid, 0.25)
    assert np.max(np.abs(local.residual(x, hybrid, 0.25))) < 1e-10


def test__assemble_local_standard__interface_element__raises(bubble):
    topology, quadrature, dofmap, bc = bubble
    e = next(c.element for c in topology.cells if c.classification == 'interface')
    with pytest.raises(ConfigError):
        assemble_local_standard(e, topology, quadrature, dofmap, PhysicsParams(), bc)


def test__hybrid_dof_map__projection__reproduces_linear_field():
    topology, _, dofmap, _ = build([], degree=1)

    def linear(points):
        return np.column_stack((points[:, 0] + 2. * points[:, 1], 1. - points[:, 1]))

    values = dofmap.project(linear)
    for portion in dofmap.portions:
        t = np.linspace(portion.t0, portion.t1, 5)
        points = topology.mesh.face_point(portion.face, t)
        assert np.allclose(dofmap.evaluate(values, portion, t), linear(points), atol=1e-13)


def test__hybrid_dof_map__mixed_degrees__face_takes_larger_degree():
    topology, _, _, _ = build([])
    dofmap = HybridDofMap(topology, [1, 3, 1, 1])
    for portion in dofmap.portions:
        sides = set(topology.mesh.face_owner[[portion.face]]) | set(topology.mesh.face_neighbor[[portion.face]])
        assert portion.degree == (3 if 1 in sides else 1)


@pytest.mark.parametrize('kwargs', [{'mu1': 0.}, {'mu1': 1., 'mu2': -1.}, {'eta': 0.}, {'ell': -1.}])
def test__physics_params__invalid_values__raise(kwargs):
    with pytest.raises(ConfigError):
        PhysicsParams(**kwargs)


def test__physics_params__tau__uses_largest_viscosity():
    assert PhysicsParams(mu1=1., mu2=10., c_tau=3., ell=2.).tau == pytest.approx(15.)
    assert PhysicsParams(mu1=4.).tau == pytest.approx(12.)


def test__boundary_data__unknown_neumann_side__raises():
    with pytest.raises(ConfigError):
        BoundaryData(neumann_sides=('north',))


def test__boundary_data__wall__no_slip_regardless_of_data():
    bc = BoundaryData(dirichlet=constant_velocity)
    points = np.zeros((3, 2))
    assert np.all(bc.velocity(points, 'wall') == 0.)
    assert np.allclose(bc.velocity(points), constant_velocity(points))


def test__element_degrees__out_of_range__raises():
    topology, _, _, _ = build([])
    with pytest.raises(ConfigError):
        element_degrees(topology, [1, 2, 11, 1])


def test__condition_number__singular_matrix__infinite():
    assert condition_number(np.array([[1., 0.], [0., 0.]])) == np.inf
