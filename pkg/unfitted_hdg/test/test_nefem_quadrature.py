# -*- coding: utf-8 -*-
import math

import numpy as np
import pytest

from ..cartesian_mesh import build_mesh
from ..cases import smoothed_square_geometry as smoothed_square, emulsion_geometry, microchannel_geometry, porosity, \
    EMULSION_DROPLETS
from ..cut_classification import classify
from ..nefem_quadrature import gauss_legendre, curve_rule, face_rule, square_rule, FanTriangle, \
    curved_triangle_rule, visibility_triangulate, region_rule, CutQuadrature, outward_side, curve_points
from ..nurbs_geometry import make_circle, make_arc, make_line, CurveSegment
from ..utils import InvertedMapError

R = 1. / 3.


def test__gauss_legendre__two_points__moments():
    x, w = gauss_legendre(2)
    assert np.allclose(x, [-0.5773502691896258, 0.5773502691896258], atol=1e-15)
    assert np.allclose(w, [1., 1.], atol=1e-15)
    for k in range(4):
        exact = 2. / (k + 1) if k % 2 == 0 else 0.
        assert np.sum(w * x ** k) == pytest.approx(exact, abs=1e-14)


def test__gauss_legendre__five_points__exact_to_degree_nine():
    x, w = gauss_legendre(5)
    assert abs(np.sum(w * x ** 9)) < 1e-14
    assert np.sum(w * x ** 8) == pytest.approx(2. / 9., abs=1e-14)


def test__gauss_legendre__zero_points__raises():
    with pytest.raises(ValueError):
        gauss_legendre(0)


def test__curve_rule__quarter_circle__arc_length():
    arc = make_arc((0.5, 0.5), R, 0., 0.5 * math.pi)
    rule = curve_rule(CurveSegment(arc, 0, 0., 1., 0), 10)
    assert rule.length == pytest.approx(0.5 * math.pi * R, abs=1e-12)
    assert np.all(rule.weights > 0)


def test__curve_rule__straight_segment__exact_length():
    line = make_line((0.1, 0.2), (0.4, 0.6), role='wall')
    rule = curve_rule(CurveSegment(line, 0, 0.25, 0.75, 0), 3)
    assert rule.length == pytest.approx(0.25, abs=1e-15)
    assert np.allclose(rule.curvatures, 0.)


def test__curve_rule__full_circle__total_curvature_and_closed_normals():
    circle = make_circle((0.5, 0.5), R)
    rules = [curve_rule(CurveSegment(c, i, 0., 1., 0), 10) for i, c in enumerate(circle)]
    total_curvature = sum(r.integrate(r.curvatures) for r in rules)
    total_normal = sum(r.integrate(r.normals) for r in rules)
    assert total_curvature == pytest.approx(2. * math.pi, abs=1e-8)
    assert np.allclose(total_normal, 0., atol=1e-10)
    radial = (rules[0].points - 0.5) / R
    assert np.allclose(rules[0].normals, radial, atol=1e-12)


def test__outward_side__interface_with_fluid_two_inside__points_into_fluid_two():
    curve = make_circle((0.5, 0.5), R, fluid=2)[0]
    assert curve.interior_side == 'left'
    assert outward_side(curve) == 'right'


def test__face_rule__half_face__weights_and_normal():
    mesh = build_mesh((0., 0.), (1., 1.), 4, 4)
    f = mesh.vertical_face(0, 1)
    rule = face_rule(mesh, f, 0., 1., 3)
    assert rule.length == pytest.approx(0.125, abs=1e-15)
    assert np.allclose(rule.normals, [-1., 0.])
    assert np.allclose(rule.points[:, 0], 0.) and np.all(rule.points[:, 1] > 0.375)


def test__square_rule__exact_for_tensor_monomials():
    mesh = build_mesh((0., 0.), (1., 1.), 4, 4)
    rule = square_rule(mesh, 5, 3)
    x, y = rule.points.T
    assert rule.integrate(x ** 5 * y ** 4) == pytest.approx((0.5 ** 6 - 0.25 ** 6) / 6 * (0.5 ** 5 - 0.25 ** 5) / 5,
                                                            abs=1e-15)


def test__curved_triangle_rule__straight_edge__affine_area():
    triangle = FanTriangle((0., 0.), (2., 0.), (0.5, 1.5))
    assert curved_triangle_rule(triangle, 4).area == pytest.approx(1.5, abs=1e-13)
    line = make_line((2., 0.), (0.5, 1.5), role='wall')
    curved = FanTriangle((0., 0.), (2., 0.), (0.5, 1.5), line, 0., 1.)
    assert curved_triangle_rule(curved, 4).area == pytest.approx(1.5, abs=1e-13)


def test__curved_triangle_rule__quarter_disk__area():
    arc = make_arc((0., 0.), R, 0., 0.5 * math.pi)
    triangle = FanTriangle((0., 0.), arc.start, arc.end, arc, 0., 1.)
    assert curved_triangle_rule(triangle, 12).area == pytest.approx(0.25 * math.pi * R ** 2, abs=1e-10)


def test__curved_triangle_rule__clockwise_triangle__raises():
    triangle = FanTriangle((0., 0.), (0.5, 1.5), (2., 0.))
    with pytest.raises(InvertedMapError):
        curved_triangle_rule(triangle, 3)


@pytest.fixture(scope='module')
def corner_bite_region():
    """Unit square minus a quarter disk of radius 0.5 at its upper right corner."""
    mesh = build_mesh((0., 0.), (2., 2.), 2, 2)
    topology = classify(make_circle((1., 1.), 0.5, role='wall', fluid_outside=True), mesh, extension=False)
    return topology.cells[0].regions_of(1)[0]


def test__visibility_triangulate__uncut_square__two_affine_triangles():
    mesh = build_mesh((0., 0.), (1., 1.), 2, 2)
    topology = classify([], mesh)
    fan = visibility_triangulate(topology.cells[0].regions[0])
    assert len(fan) == 2 and fan.n_curved == 0
    assert np.allclose(fan.triangles[0].apex, (0., 0.))
    assert fan.area() == pytest.approx(0.25, abs=1e-15)


def test__visibility_triangulate__corner_bite__single_fan_with_curved_triangle(corner_bite_region):
    fan = visibility_triangulate(corner_bite_region)
    assert fan.n_iterations == 1
    assert fan.n_curved == 1 and len(fan) == 3
    assert fan.area(8) == pytest.approx(1. - 0.25 * math.pi * 0.25, abs=1e-9)


def test__visibility_triangulate__side_bite__split_into_several_fans():
    mesh = build_mesh((0., 0.), (2., 2.), 2, 2)
    topology = classify(make_circle((0.5, 1.), 0.3, role='wall', fluid_outside=True), mesh, extension=False)
    region = topology.cells[0].regions_of(1)[0]
    fan = visibility_triangulate(region)
    assert fan.n_iterations > 1
    assert fan.area(8) == pytest.approx(1. - 0.5 * math.pi * 0.09, abs=1e-9)
    for triangle in fan.triangles:
        assert np.all(triangle.rule(6).weights > 0)


def test__region_rule__empty_region__no_points():
    rule = region_rule(None, 5)
    assert len(rule) == 0 and rule.area == 0.


@pytest.mark.parametrize('k', [1, 2, 4])
def test__region_rule__uncut_element__exact_monomials(k):
    mesh = build_mesh((0., 0.), (1., 1.), 4, 4)
    region = classify([], mesh).cells[1].regions[0]
    rule = region_rule(region, k + 3)
    x, y = rule.points.T
    for a in range(2 * k + 2):
        for b in range(2 * k + 2 - a):
            exact = (0.5 ** (a + 1) - 0.25 ** (a + 1)) / (a + 1) * 0.25 ** (b + 1) / (b + 1)
            assert rule.integrate(x ** a * y ** b) == pytest.approx(exact, abs=1e-12)


def test__cut_quadrature__bubble__regions_cover_unit_square():
    mesh = build_mesh((0., 0.), (1., 1.), 8, 8)
    quadrature = CutQuadrature(classify(make_circle((0.5, 0.5), R), mesh))
    inside = sum(quadrature.element_rule(e, 1, 5).area for e in range(mesh.n_elements))
    outside = sum(quadrature.element_rule(e, 2, 5).area for e in range(mesh.n_elements))
    assert inside + outside == pytest.approx(1., abs=1e-9)
    assert inside == pytest.approx(math.pi * R ** 2, abs=1e-9)


def test__cut_quadrature__unit_disk__second_moment():
    mesh = build_mesh((-1.2, -1.2), (2.4, 2.4), 4, 4)
    quadrature = CutQuadrature(classify(make_circle((0., 0.), 1.), mesh))
    total = 0.
    for e in range(mesh.n_elements):
        rule = quadrature.element_rule(e, 1, 8)
        total += rule.integrate(rule.points[:, 0] ** 2)
    assert total == pytest.approx(0.25 * math.pi, abs=1e-8)


def test__cut_quadrature__curve_rules__cached_per_degree():
    mesh = build_mesh((0., 0.), (1., 1.), 8, 8)
    quadrature = CutQuadrature(classify(make_circle((0.5, 0.5), R), mesh))
    e = next(c.element for c in quadrature.topology.cells if c.cut)
    assert quadrature.curve_rules(e, 4) is quadrature.curve_rules(e, 4)
    assert quadrature.curve_rules(e, 4) is not quadrature.curve_rules(e, 5)


def test__visibility_triangulate__arc_tangent_to_cell_face__single_fan():
    mesh = build_mesh((0., 0.), (1., 1.), 8, 8)
    topology = classify(smoothed_square(), mesh, extension=False)
    region = topology.cells[mesh.element_id(1, 0)].regions_of(1)[0]
    fan = visibility_triangulate(region)
    assert fan.n_iterations == 1 and fan.n_curved == 1
    rule = fan.rule(8)
    assert np.all(rule.weights > 0)
    exact = 0.15 * 0.025 - (0.0125 * math.sqrt(0.0225 - 0.025 ** 2) + 0.01125 * math.asin(0.025 / 0.15))
    assert rule.area == pytest.approx(exact, abs=1e-12)


def cut_area(quadrature: CutQuadrature, label: int, n: int = 8) -> float:
    area = 0.
    for e in range(quadrature.topology.n_elements):
        rule = quadrature.element_rule(e, label, n)
        assert np.all(rule.weights > 0)
        area += rule.area
    return area


@pytest.mark.parametrize('n', [4, 8, 16])
def test__cut_quadrature__smoothed_square_tangent_corners__positive_weights_and_area(n):
    mesh = build_mesh((0., 0.), (1., 1.), n, n)
    quadrature = CutQuadrature(classify(smoothed_square(), mesh, extension=False))
    assert cut_area(quadrature, 1) == pytest.approx(0.64 - math.pi * 0.15 ** 2, abs=1e-8)


def test__cut_quadrature__off_center_circle_on_2x2__both_fluids_cover_square():
    mesh = build_mesh((0., 0.), (1., 1.), 2, 2)
    quadrature = CutQuadrature(classify(make_circle((0.4, 0.45), 0.3), mesh, extension=False))
    assert cut_area(quadrature, 1) == pytest.approx(math.pi * 0.09, abs=1e-9)
    assert cut_area(quadrature, 2) == pytest.approx(1. - math.pi * 0.09, abs=1e-9)


def test__cut_quadrature__emulsion_on_16x16__droplet_and_matrix_areas():
    mesh = build_mesh((0., 0.), (1., 1.), 16, 16)
    quadrature = CutQuadrature(classify(emulsion_geometry(), mesh, extension=False))
    droplets = sum(math.pi * r ** 2 for _, _, r in EMULSION_DROPLETS)
    assert cut_area(quadrature, 1) == pytest.approx(droplets, abs=1e-8)
    assert cut_area(quadrature, 2) == pytest.approx(porosity() - droplets, abs=1e-8)


def test__cut_quadrature__microchannel_on_32x32__positive_weights():
    mesh = build_mesh((0., 0.), (1., 1.), 32, 32)
    quadrature = CutQuadrature(classify(microchannel_geometry(), mesh, extension=False))
    assert 0.05 < cut_area(quadrature, 1) < 0.43 * 0.94


def test__curve_points__rational_arc__degree_times_points_plus_one():
    arc = make_arc((0., 0.), R, 0., 0.5 * math.pi)
    line = make_line((0., 0.), (1., 1.), role='wall')
    assert curve_points(arc, 4) == 9
    assert curve_points(line, 4) == 4
    assert len(curve_rule(CurveSegment(arc, 0, 0., 1., 0), 4)) == 9


def test__curved_triangle_rule__quarter_disk_with_few_points__accurate_second_moment():
    arc = make_arc((0., 0.), R, 0., 0.5 * math.pi)
    rule = curved_triangle_rule(FanTriangle((0., 0.), arc.start, arc.end, arc, 0., 1.), 4)
    x, y = rule.points.T
    assert rule.integrate(x ** 2 + y ** 2) == pytest.approx(math.pi * R ** 4 / 8., abs=1e-12)
