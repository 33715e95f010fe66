# -*- coding: utf-8 -*-
import math

import numpy as np
import pytest

from ..cartesian_mesh import build_mesh
from ..cases import manufactured_reference, taylor_couette_reference, taylor_couette_coefficients, bubble_reference, \
    source_residual, gradient_residual, reference_mean, m_shape_geometry, m_shape_active_box, microchannel_geometry, \
    emulsion_geometry, porosity, create_case, MICROCHANNEL_OBSTACLES, EMULSION_DROPLETS, PORE_RADIUS, \
    M_SHAPE_EPSILONS, TAYLOR_COUETTE_RADII
from ..cut_classification import classify
from ..nefem_quadrature import CutQuadrature
from ..utils import ConfigError
from ..utils_config import load_config


@pytest.fixture
def unit_square_points():
    return 0.05 + 0.9 * np.random.RandomState(0).rand(100, 2)


@pytest.fixture
def annulus_points():
    rng = np.random.RandomState(1)
    r = rng.uniform(0.18, 0.32, 100)
    theta = rng.uniform(0., 2. * math.pi, 100)
    return np.column_stack((0.5 + r * np.cos(theta), 0.5 + r * np.sin(theta)))


def test__manufactured_reference__center__velocity_vanishes():
    ref = manufactured_reference()
    assert np.allclose(ref.u(np.array([[0.5, 0.5]])), 0., atol=1e-15)
    assert np.allclose(ref.p(np.array([[0.5, 0.1], [0.5, 0.9]])), 0.25)


def test__manufactured_reference__random_points__divergence_free(unit_square_points):
    grad = manufactured_reference().grad_u(unit_square_points)
    assert np.max(np.abs(grad[:, 0] + grad[:, 3])) < 1e-10


@pytest.mark.parametrize('mu', [1., 2.5])
def test__manufactured_reference__finite_differences__source_and_gradient_consistent(unit_square_points, mu):
    ref = manufactured_reference(mu)
    assert source_residual(ref, unit_square_points) < 1e-6
    assert gradient_residual(ref, unit_square_points) < 1e-6


def test__manufactured_reference__mixed_variable__scaled_gradient(unit_square_points):
    ref = manufactured_reference(4.)
    assert np.allclose(ref.L(unit_square_points), -2. * ref.grad_u(unit_square_points))


def test__manufactured_reference__traction__stress_times_normal():
    ref = manufactured_reference()
    points = np.array([[0.3, 0.], [0.3, 0.]])
    normals = np.array([[0., -1.], [1., 0.]])
    grad = ref.grad_u(points)
    p = ref.p(points)
    traction = ref.traction(points, normals)
    assert np.allclose(traction[0], [-grad[0, 1], p[0] - grad[0, 3]])
    assert np.allclose(traction[1], [grad[1, 0] - p[1], grad[1, 2]])


def test__taylor_couette_coefficients__default_radii__known_values():
    A, B = taylor_couette_coefficients()
    assert A == pytest.approx(4. / 3., abs=1e-14)
    assert B == pytest.approx(-1. / 27., abs=1e-14)


def test__taylor_couette_reference__walls__match_angular_velocities():
    ref = taylor_couette_reference()
    r_int, r_ext = TAYLOR_COUETTE_RADII
    theta = np.linspace(0., 2. * math.pi, 7)
    for r, speed in ((r_int, 0.), (r_ext, 1. / 3.)):
        points = np.column_stack((0.5 + r * np.cos(theta), 0.5 + r * np.sin(theta)))
        assert np.allclose(np.linalg.norm(ref.u(points), axis=1), speed, atol=1e-14)


def test__taylor_couette_reference__finite_differences__consistent(annulus_points):
    ref = taylor_couette_reference()
    assert source_residual(ref, annulus_points) < 1e-6
    assert gradient_residual(ref, annulus_points) < 1e-6
    assert np.allclose(ref.p(annulus_points), 1.)


def test__taylor_couette_reference__outside_annulus__warns():
    ref = taylor_couette_reference()
    with pytest.warns(UserWarning, match='outside the annulus'):
        ref.u(np.array([[0.5, 0.55]]))


def test__bubble_reference__pressure_jump__gamma_over_radius():
    ref = bubble_reference(gamma=2.)
    p = ref.p(np.array([[0.5, 0.5], [0.05, 0.05]]))
    assert p[0] - p[1] == pytest.approx(-6.)
    assert p[1] == pytest.approx(math.pi * 2. / 3.)
    assert np.all(ref.u(np.zeros((3, 2))) == 0.)


def test__bubble_reference__mean_over_square__vanishes():
    # exact area weights: pi R^2 inside, 1 - pi R^2 outside
    R = 1. / 3.
    ref = bubble_reference()
    inside, outside = ref.p(np.array([[0.5, 0.5], [0.01, 0.01]]))
    assert math.pi * R ** 2 * inside + (1. - math.pi * R ** 2) * outside == pytest.approx(0., abs=1e-14)


def test__reference_mean__manufactured_on_unit_square__one_sixth():
    topology = classify([], build_mesh((0., 0.), (1., 1.), 4, 4))
    mean = reference_mean(topology, CutQuadrature(topology), manufactured_reference().p)
    assert mean == pytest.approx(1. / 6., abs=1e-13)


def test__m_shape_geometry__bad_epsilon__raises():
    with pytest.raises(ConfigError):
        m_shape_geometry(0.3)
    with pytest.raises(ConfigError):
        m_shape_active_box(6)
    assert m_shape_active_box(8) == (2, 2, 6, 8)


@pytest.mark.parametrize('epsilon', M_SHAPE_EPSILONS)
def test__m_shape__4x4__notch_face_and_cell_ratios(epsilon):
    mesh = build_mesh((0., 0.), (1., 1.), 4, 4, active_box=m_shape_active_box(4))
    topology = classify(m_shape_geometry(epsilon), mesh, extension=False)
    notch_face = mesh.element_faces(13)[1]
    assert topology.beta(notch_face, 1) == pytest.approx(epsilon / 0.25, abs=1e-10)
    assert topology.alpha(13, 1) == pytest.approx(0.5 + 2. * epsilon, abs=1e-10)
    assert topology.alpha(14, 1) == pytest.approx(0.5 + 2. * epsilon, abs=1e-10)
    assert not topology.is_active(0)


def test__microchannel_geometry__first_obstacle__table_values():
    assert MICROCHANNEL_OBSTACLES[0] == (0.410, 0.438, 0.034)
    assert len(MICROCHANNEL_OBSTACLES) == 8
    curves = microchannel_geometry()
    points = np.vstack([c.evaluate(np.linspace(0., 1., 9)) for c in curves[4:8]])
    assert np.allclose(np.linalg.norm(points - (0.410, 0.438), axis=1), 0.034, atol=1e-13)
    roles = [c.role for c in curves[:4]]
    assert roles == ['boundary-Neumann', 'wall', 'boundary-Dirichlet', 'wall']


def test__microchannel_geometry__obstacles__clear_of_each_other_and_walls():
    curves = microchannel_geometry()
    wall_points = np.vstack([c.evaluate(np.linspace(0., 1., 400)) for c in (curves[1], curves[3])])
    for i, (xc, yc, r) in enumerate(MICROCHANNEL_OBSTACLES):
        assert np.min(np.linalg.norm(wall_points - (xc, yc), axis=1)) > r
        for xo, yo, ro in MICROCHANNEL_OBSTACLES[i + 1:]:
            assert math.hypot(xc - xo, yc - yo) > r + ro


def test__emulsion_geometry__droplets_and_pore__table_values():
    assert EMULSION_DROPLETS[0] == (0.156, 0.156, 0.030)
    assert len(EMULSION_DROPLETS) == 28
    curves = emulsion_geometry()
    assert len(curves) == 4 * 29
    assert curves[0].role == 'wall' and curves[0].fluid == 2
    assert all(c.role == 'interface' for c in curves[4:])
    assert PORE_RADIUS == 0.25231
    assert porosity() == pytest.approx(0.8, abs=2e-3)


def test__create_case__bubble__default_physics_and_mean():
    case = create_case(load_config('bubble'))
    assert (case.params.mu1, case.params.mu2, case.params.gamma) == (10., 1., 1.)
    assert case.mean_pressure == 0.
    assert case.reference.name == 'bubble'
    assert len(case.pairing) == 0


def test__create_case__emulsion__periodic_pairing_and_gravity():
    case = create_case(load_config('emulsion').updated(mesh=4))
    assert len(case.pairing) > 0
    assert np.allclose(case.params.source(np.zeros((2, 2))), [[0., -613.125]] * 2)
    assert case.params.gamma == 2.4e5


def test__create_case__manufactured_with_neumann__no_mean_constraint():
    conf = load_config('manufactured')
    assert create_case(conf).mean_pressure == pytest.approx(1. / 6.)
    case = create_case(conf.updated(neumann_sides=('right',)))
    assert case.mean_pressure is None
    assert case.bc.neumann_sides == ('right',)


def test__create_case__periodic_taylor_couette__raises():
    with pytest.raises(ConfigError):
        create_case(load_config('taylor_couette').updated(periodic='x'))


def test__create_case__viscosity_override__reference_follows():
    case = create_case(load_config('taylor_couette').updated(mu1=3.))
    assert case.params.mu1 == 3.
    assert case.reference.mu == 3.


def test__create_case__xy_periodic_bubble__mean_velocity_pinned():
    assert create_case(load_config('bubble')).bc.mean_velocity is None
    case = create_case(load_config('bubble').updated(mesh=4, periodic='xy'))
    assert np.array_equal(case.bc.mean_velocity, [0., 0.])
