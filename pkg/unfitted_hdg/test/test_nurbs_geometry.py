# -*- coding: utf-8 -*-
import math

import numpy as np
import pytest

from ..nurbs_geometry import NurbsCurve, make_circle, make_line, make_polyline, make_spline, make_arc, \
    chain_curves, eval_curve, eval_derivatives, line_jacobian, normal_and_curvature
from ..utils import GeometryError, EvaluationDomainError, polygon_signed_area


@pytest.fixture
def random_curve():
    rng = np.random.RandomState(3)
    points = rng.uniform(0., 1., (6, 2))
    weights = rng.uniform(0.5, 2., 6)
    return NurbsCurve(3, [0., 0., 0., 0., 0.4, 0.7, 1., 1., 1., 1.], points, weights)


def test__eval_curve__clamped_ends__returns_control_points(random_curve):
    assert np.allclose(eval_curve(random_curve, 0.), random_curve.control_points[0], atol=1e-14)
    assert np.allclose(eval_curve(random_curve, 1.), random_curve.control_points[-1], atol=1e-14)


def test__eval_curve__line_midpoint__returns_midpoint():
    line = make_line((0.1, 0.2), (0.7, -0.4))
    assert np.allclose(eval_curve(line, 0.5), (0.4, -0.1), atol=1e-15)


def test__eval_curve__outside_unit_interval__raises_domain_error(random_curve):
    with pytest.raises(EvaluationDomainError):
        eval_curve(random_curve, 1.01)
    with pytest.raises(EvaluationDomainError):
        eval_curve(random_curve, -0.2)


def test__make_circle__sampled_points__lie_on_circle():
    center = np.array([0.5, 0.5])
    radius = 1. / 3.
    arcs = make_circle(center, radius)
    lam = np.linspace(0., 1., 250)
    distances = np.concatenate([np.linalg.norm(arc.evaluate(lam) - center, axis=1) for arc in arcs])
    assert np.max(np.abs(distances - radius)) < 1e-13


def test__make_circle__quarter_parameter__lies_on_circle_inside_first_quadrant():
    arc = make_circle((0.5, 0.5), 1. / 3.)[0]
    point = eval_curve(arc, 0.25) - 0.5
    assert abs(np.linalg.norm(point) - 1. / 3.) < 1e-12
    assert point[0] > 0 and point[1] > 0


@pytest.mark.parametrize('orientation', ['counterclockwise', 'clockwise'])
def test__make_circle__quadrant_end_points__exact_and_closed(orientation):
    arcs = make_circle((0.5, 0.5), 1. / 3., orientation=orientation)
    assert np.all(arcs[-1].end == arcs[0].start)
    for previous, arc in zip(arcs[:-1], arcs[1:]):
        assert np.all(previous.end == arc.start)
    assert arcs[0].start[1] == 0.5 and arcs[1].start[0] == 0.5


def test__make_circle__clockwise__negative_signed_area():
    arcs = make_circle((0.5, 0.5), 0.25, orientation='clockwise')
    lam = np.linspace(0., 1., 50, endpoint=False)
    polygon = np.concatenate([arc.evaluate(lam) for arc in arcs])
    assert polygon_signed_area(polygon) < 0
    assert all(arc.interior_side == 'right' for arc in arcs)


def test__make_circle__fluid_outside__flips_orientation_flag():
    arcs = make_circle((0.5, 0.5), 0.25, orientation='counterclockwise', role='wall', fluid_outside=True)
    assert all(arc.orientation == 'clockwise' for arc in arcs)
    assert arcs[0].side_labels() == (0, 1)


def test__make_circle__taylor_couette_rings__do_not_overlap():
    inner = make_circle((0.5, 0.5), 1. / 6.)
    outer = make_circle((0.5, 0.5), 1. / 3.)
    lam = np.linspace(0., 1., 100)
    r_inner = max(np.max(np.linalg.norm(c.evaluate(lam) - 0.5, axis=1)) for c in inner)
    r_outer = min(np.min(np.linalg.norm(c.evaluate(lam) - 0.5, axis=1)) for c in outer)
    assert r_inner < r_outer


def test__eval_derivatives__line__constant_tangent():
    p0, p1 = np.array([0.2, 0.3]), np.array([0.9, 0.1])
    line = make_line(p0, p1)
    for lam in (0., 0.3, 1.):
        d1, d2 = eval_derivatives(line, lam, order=2)
        assert np.allclose(d1, p1 - p0, atol=1e-14)
        assert np.allclose(d2, 0., atol=1e-14)


def test__eval_derivatives__random_curve__matches_finite_differences(random_curve):
    step = 1e-6
    lam = np.random.RandomState(0).uniform(step, 1. - step, 100)
    d1 = random_curve.derivatives(lam, order=1)[0]
    fd = (random_curve.evaluate(lam + step) - random_curve.evaluate(lam - step)) / (2 * step)
    assert np.all(np.linalg.norm(d1 - fd, axis=1) <= 1e-6 * np.linalg.norm(d1, axis=1))


def test__eval_derivatives__second_order__matches_finite_differences(random_curve):
    step = 1e-5
    lam = np.linspace(0.05, 0.95, 19) + 0.013
    d1, d2 = random_curve.derivatives(lam, order=2)
    fd = (random_curve.derivatives(lam + step)[0] - random_curve.derivatives(lam - step)[0]) / (2 * step)
    assert np.allclose(d2, fd, rtol=1e-5, atol=1e-5 * np.max(np.abs(d2)))


def test__eval_derivatives__circle__curvature_is_inverse_radius():
    radius = 0.4
    for arc in make_circle((0., 0.), radius):
        lam = np.linspace(0., 1., 20)
        d1, d2 = arc.derivatives(lam, order=2)
        kappa = np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / np.linalg.norm(d1, axis=1) ** 3
        assert np.allclose(kappa, 1. / radius, atol=1e-8)


def test__line_jacobian__straight_segment__equals_length():
    line = make_line((0., 0.), (3., 4.))
    assert line_jacobian(line, 0.2) == pytest.approx(5., abs=1e-14)
    assert np.allclose(line.jacobian(np.linspace(0., 1., 7)), 5.)


def test__line_jacobian__scaled_control_points__scales_value(random_curve):
    scaled = NurbsCurve(3, random_curve.knots, 2.5 * random_curve.control_points, random_curve.weights)
    lam = np.linspace(0., 1., 11)
    assert np.allclose(scaled.jacobian(lam), 2.5 * random_curve.jacobian(lam), rtol=1e-12)


def test__line_jacobian__quadrant_of_unit_circle__integrates_to_quarter_length():
    total = 0.
    for arc in make_circle((0., 0.), 1.):
        quarter = arc.arc_length(n=20)
        assert quarter == pytest.approx(0.5 * math.pi, abs=1e-10)
        total += quarter
    assert total == pytest.approx(2 * math.pi, abs=1e-10)


def test__line_jacobian__degenerate_tangent__raises():
    point = NurbsCurve(1, [0., 0., 1., 1.], [(0.3, 0.3), (0.3, 0.3)])
    with pytest.raises(GeometryError):
        line_jacobian(point, 0.5)


def test__normal_and_curvature__disk_outward__divergence_is_inverse_radius():
    for arc in make_circle((0.5, 0.5), 1. / 3.):
        lam = np.linspace(0., 1., 9)
        normal, divergence = arc.normal_and_curvature(lam, arc.interior_side)
        points = arc.evaluate(lam)
        assert np.allclose(divergence, 3., atol=1e-8)
        assert np.allclose(normal, (points - 0.5) * 3., atol=1e-12)


def test__normal_and_curvature__clockwise_disk__same_outward_normal():
    for arc in make_circle((0.5, 0.5), 0.25, orientation='clockwise'):
        normal, divergence = normal_and_curvature(arc, 0.3, arc.interior_side)
        assert divergence == pytest.approx(4., abs=1e-8)
        assert np.allclose(normal, (eval_curve(arc, 0.3) - 0.5) * 4., atol=1e-12)


def test__normal_and_curvature__straight_segment__zero_divergence():
    line = make_line((0., 0.), (1., 1.))
    normal, divergence = normal_and_curvature(line, 0.5, 'left')
    assert divergence == pytest.approx(0., abs=1e-14)
    assert np.allclose(normal, np.array([1., -1.]) / math.sqrt(2.))


def test__normal_and_curvature__flipped_side__surface_tension_force_unchanged():
    arc = make_circle((0., 0.), 0.5)[1]
    n1, div1 = normal_and_curvature(arc, 0.4, 'left')
    n2, div2 = normal_and_curvature(arc, 0.4, 'right')
    assert np.allclose(n1, -n2)
    assert np.allclose(div1 * n1, div2 * n2)


def test__basis_functions__partition_of_unity(random_curve):
    values = random_curve.basis_functions(np.random.RandomState(1).uniform(0., 1., 50))
    assert np.allclose(np.sum(values, axis=1), 1., atol=1e-13)


@pytest.mark.parametrize('kwargs', [
    dict(degree=2, knots=[0., 0., 0., 1., 1., 1.], control_points=[(0, 0), (1, 0), (1, 1)], weights=[1., 0., 1.]),
    dict(degree=2, knots=[0., 0., 1., 1., 1.], control_points=[(0, 0), (1, 0), (1, 1)]),
    dict(degree=2, knots=[0., 0., 0., 0.5, 0.5, 1., 1., 1.], control_points=[(0, 0), (1, 0), (1, 1), (0, 1), (0, 2)]),
    dict(degree=1, knots=[0., 0.2, 1., 1.], control_points=[(0, 0), (1, 0)]),
    dict(degree=1, knots=[0., 0., 1., 1.], control_points=[(0, 0), (1, 0)], orientation='sideways'),
])
def test__nurbs_curve__invalid_data__raises(kwargs):
    with pytest.raises(GeometryError):
        NurbsCurve(**kwargs)


def test__make_arc__sweep_above_quarter_turn__raises():
    with pytest.raises(GeometryError):
        make_arc((0., 0.), 1., 0., math.pi)


def test__make_spline__clamped__interpolates_end_points():
    points = [(0., 0.), (0.2, 0.5), (0.6, 0.4), (0.8, 0.9), (1., 1.)]
    spline = make_spline(points, degree=3)
    assert np.allclose(spline.evaluate(0.), points[0])
    assert np.allclose(spline.evaluate(1.), points[-1])
    assert np.allclose(spline.weights, 1.)


def test__chain_curves__circle__one_closed_chain():
    chains = chain_curves(make_circle((0.5, 0.5), 0.2))
    assert len(chains) == 1
    assert chains[0].closed
    assert chains[0].n_curves == 4
    assert chains[0].length() == pytest.approx(2 * math.pi * 0.2, abs=1e-10)


def test__chain_curves__polyline_and_circle__open_and_closed_chain():
    curves = make_polyline([(0., 1.), (0.5, 0.7), (1., 1.)], role='boundary-Dirichlet') + \
        make_circle((0.5, 0.3), 0.1, role='wall', fluid_outside=True)
    chains = chain_curves(curves)
    assert [c.closed for c in chains] == [False, True]
    assert chains[0].curve_ids == [0, 1]
    assert chains[1].curve_ids == [2, 3, 4, 5]


def test__chain_curves__global_parameter__crosses_curve_joins():
    chain = chain_curves(make_polyline([(0., 0.), (1., 0.), (1., 1.)]))[0]
    assert chain.locate(1.25) == (1, 0.25)
    assert np.allclose(chain.evaluate([0.5, 1.5, 2.]), [[0.5, 0.], [1., 0.5], [1., 1.]])


def test__chain_curves__mixed_sides__raises():
    curves = [make_line((0., 0.), (1., 0.)), make_line((1., 0.), (1., 1.), orientation='clockwise')]
    with pytest.raises(GeometryError):
        chain_curves(curves)
