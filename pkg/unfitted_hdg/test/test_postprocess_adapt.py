# -*- coding: utf-8 -*-
import numpy as np
import pytest

from ..cartesian_mesh import build_mesh
from ..cut_classification import classify
from ..hdg_local import PhysicsParams, BoundaryData
from ..hdg_solver import solve_stokes
from ..nurbs_geometry import make_circle, make_line
from ..postprocess_adapt import postprocess_velocity, region_error, estimate_error, degree_increment, \
    AdaptState, adapt_degrees, run_adaptivity, flux_report, flux_subsets, mass_flux, pressure_jump, error_norms, \
    FluxReport
from ..utils import ConfigError


def linear_velocity(points):
    return np.column_stack((points[:, 0] + 0.5 * points[:, 1], -points[:, 1]))


def linear_gradient(points):
    return np.tile([-1., -0.5, 0., 1.], (len(points), 1))


def unit_source(points):
    return np.ones((len(points), 2))


def shear_velocity(points):
    return np.column_stack((points[:, 1] ** 2, points[:, 0] ** 2))


def shear_source(points):
    return np.full((len(points), 2), -2.)


@pytest.fixture(scope='module')
def linear_solution():
    topology = classify([], build_mesh((0., 0.), (1., 1.), 3, 3))
    return solve_stokes(topology, 1, PhysicsParams(source=unit_source), BoundaryData(dirichlet=linear_velocity),
                        mean_pressure=1.)


@pytest.fixture(scope='module')
def bubble_solution():
    topology = classify(make_circle((0.5, 0.5), 1. / 3., role='interface'), build_mesh((0., 0.), (1., 1.), 8, 8))
    return solve_stokes(topology, 1, PhysicsParams(mu1=10., mu2=1., gamma=1.), BoundaryData())


def test__postprocess_velocity__linear_velocity__reproduced(linear_solution):
    mesh = linear_solution.topology.mesh
    for key, u_star in postprocess_velocity(linear_solution).items():
        assert u_star.degree == 2 and not u_star.rank_deficient
        x0, y0, x1, y1 = mesh.element_bounds(key[0])
        points = np.random.RandomState(key[0]).rand(10, 2) * (x1 - x0, y1 - y0) + (x0, y0)
        assert np.allclose(u_star.evaluate(mesh, points), linear_velocity(points), atol=1e-11)


def test__postprocess_velocity__mean_constraint__matches_field_mean(linear_solution):
    quadrature = linear_solution.quadrature
    mesh = linear_solution.topology.mesh
    postprocessed = postprocess_velocity(linear_solution, [(4, 1)])
    rule = quadrature.element_rule(4, 1, 6)
    u = linear_solution.fields[(4, 1)].evaluate(mesh, rule.points)[1]
    u_star = postprocessed[(4, 1)].evaluate(mesh, rule.points)
    assert np.allclose(rule.integrate(u_star), rule.integrate(u), atol=1e-12 * rule.area)


def test__estimate_error__linear_velocity__vanishes(linear_solution):
    errors = estimate_error(linear_solution, postprocess_velocity(linear_solution))
    assert errors.shape == (9,)
    assert np.max(errors) < 1e-9


def test__estimate_error__bubble__below_tolerance(bubble_solution):
    errors = estimate_error(bubble_solution, postprocess_velocity(bubble_solution))
    assert np.max(errors) < 1e-9


def test__region_error__identical_fields__zero():
    w = np.full(4, 0.25)
    u = np.arange(8.).reshape(4, 2)
    assert region_error(w, u, u) == 0.


def test__region_error__tiny_postprocessed_field__absolute_error():
    w = np.ones(2)
    u = np.full((2, 2), 1e-3)
    assert region_error(w, u, np.zeros((2, 2))) == pytest.approx(2e-3)


def test__degree_increment__error_below_tolerance__not_positive():
    assert degree_increment(1e-4, 1e-2, 1. / 16, 3) <= 0
    assert degree_increment(0., 1e-2, 1. / 16, 3) == -2


def test__degree_increment__element_size_not_below_one__raises():
    with pytest.raises(ConfigError):
        degree_increment(1., 1e-2, 1., 1)


def test__adapt_degrees__large_errors__clamped_to_k_max():
    state = AdaptState(np.ones(3, dtype=int), 1e-2, k_max=4)
    state = adapt_degrees(state, np.array([1e-2, 1e-1, 1e6]), 1. / 32)
    assert state.degrees.tolist() == [1, 2, 4]
    assert not state.converged and state.iteration == 1


def test__adapt_degrees__alternating_degree__frozen_at_larger():
    h = 0.5
    state = AdaptState(np.array([2]), 1e-2)
    state = adapt_degrees(state, np.array([0.02]), h)
    assert state.degrees.tolist() == [3]
    state = adapt_degrees(state, np.array([0.005]), h)
    assert state.degrees.tolist() == [3]
    assert state.frozen == {0}
    state = adapt_degrees(state, np.array([1.]), h)
    assert state.degrees.tolist() == [3] and state.converged


def test__run_adaptivity__exact_solution__converges_at_lowest_degree():
    topology = classify([], build_mesh((0., 0.), (1., 1.), 2, 2))
    solution, state, trace = run_adaptivity(topology, PhysicsParams(source=unit_source),
                                            BoundaryData(dirichlet=linear_velocity), 1e-2, mean_pressure=1.)
    assert state.converged and state.iteration == 1
    assert np.all(solution.degrees == 1)
    assert len(trace) == 4 and {row['iteration'] for row in trace} == {0}


def test__run_adaptivity__iteration_limit__warns(mocker):
    topology = classify([], build_mesh((0., 0.), (1., 1.), 2, 2))
    mocker.patch('unfitted_hdg.postprocess_adapt.estimate_error', return_value=np.ones(4))
    with pytest.warns(UserWarning, match='did not converge'):
        solution, state, _ = run_adaptivity(topology, PhysicsParams(), BoundaryData(), 1e-2, k_max=3,
                                            max_iterations=1)
    assert not state.converged
    assert np.all(solution.degrees == 3)


def test__mass_flux__fitted_pure_dirichlet__uncut_cells_conserve_mass(linear_solution):
    report = flux_report(linear_solution)
    assert all(kind == 'uncut' for _, kind, _ in report.subsets)
    assert report.max_abs(['uncut']) < 1e-12
    assert abs(report.global_sum) < 1e-12


def test__mass_flux__unknown_variant__raises(linear_solution):
    with pytest.raises(ConfigError):
        mass_flux(linear_solution, [0], 'average')


def test__flux_report__straight_cut__data_variant_at_solver_precision():
    line = make_line((0., 0.601), (1., 0.601), orientation='clockwise', role='boundary-Dirichlet')
    topology = classify([line], build_mesh((0., 0.), (1., 1.), 4, 4))
    solution = solve_stokes(topology, 2, PhysicsParams(source=unit_source), BoundaryData(dirichlet=linear_velocity))
    report = flux_report(solution, 'data')
    kinds = {kind for _, kind, _ in report.subsets}
    assert kinds == {'cut', 'uncut'}
    assert report.max_abs(['cut', 'uncut']) < 1e-10
    assert abs(report.global_sum) < 1e-10
    element = flux_report(solution, 'element')
    assert element.max_abs(['uncut']) < 1e-10
    assert element.balance == [value for _, _, value in report.subsets]
    assert abs(element.global_sum) < 1e-10


def test__flux_report__element_variant__global_sum_from_data_balance():
    report = FluxReport([([0], 'cut', 2e-4), ([1], 'uncut', 0.)], 'element', balance=[1e-16, -1e-16])
    assert report.global_sum == pytest.approx(0., abs=1e-15)
    assert report.max_abs(['cut', 'extended']) == 2e-4
    rows = report.to_csv_rows()
    assert [row['balance'] for row in rows] == [1e-16, -1e-16]
    assert rows[0]['elements'] == '0' and rows[0]['J_S'] == 2e-4


def test__flux_report__curved_dirichlet_wall__element_variant_measures_defect():
    circle = make_circle((0.5, 0.5), 0.3, role='boundary-Dirichlet', fluid_outside=True)
    topology = classify(circle, build_mesh((0., 0.), (1., 1.), 4, 4))
    solution = solve_stokes(topology, 1, PhysicsParams(source=shear_source), BoundaryData(dirichlet=shear_velocity))
    data, element = flux_report(solution, 'data'), flux_report(solution, 'element')
    assert data.max_abs(['cut', 'extended']) < 1e-10
    assert element.max_abs(['cut', 'extended']) > 1e3 * data.max_abs(['cut', 'extended'])
    assert element.max_abs(['uncut']) < 1e-10


def test__flux_subsets__extended_patches__partition_active_elements():
    line = make_line((0., 0.501), (1., 0.501), orientation='clockwise', role='boundary-Dirichlet')
    topology = classify([line], build_mesh((0., 0.), (1., 1.), 4, 4))
    subsets = flux_subsets(topology)
    covered = sorted(e for elements, _ in subsets for e in elements)
    assert covered == topology.active_elements()
    assert sum(kind == 'extended' for _, kind in subsets) == 4


def test__pressure_jump__bubble__surface_tension_over_radius(bubble_solution):
    topology = bubble_solution.topology
    cells = [c.element for c in topology.cells if c.classification == 'interface'
             and topology.field_host(c.element, 1) == c.element and topology.field_host(c.element, 2) == c.element]
    assert cells
    for cell in cells:
        assert pressure_jump(bubble_solution, cell) == pytest.approx(-3., abs=1e-8)


def test__error_norms__linear_solution__rounding_level(linear_solution):
    postprocessed = postprocess_velocity(linear_solution)
    errors = error_norms(linear_solution, u=linear_velocity, p=lambda x: x[:, 0] + x[:, 1],
                         L=linear_gradient, postprocessed=postprocessed)
    assert set(errors) == {'u', 'p', 'L', 'u_star'}
    assert max(errors.values()) < 1e-9
