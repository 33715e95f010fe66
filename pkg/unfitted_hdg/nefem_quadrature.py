# -*- coding: utf-8 -*-
"""Quadrature on straight faces, along NURBS curves and over cut regions.

Curves are integrated in their parametric space, so the geometry is exact.
A cut region is partitioned by a visibility fan into triangles having at most
one curved edge; a curved triangle (x_apex, C(lambda_a), C(lambda_b)) is
integrated through the collapsed map

    psi(s, theta) = (1 - theta) C(lambda(s)) + theta x_apex,

whose Jacobian determinant (1 - theta) (lambda_b - lambda_a) (C - x_apex) x C'
is evaluated analytically.
"""
import math
from typing import List, Optional, Tuple, Dict

import numpy as np
from numpy import ndarray
from numpy.polynomial.legendre import leggauss
from matplotlib.path import Path

from .cartesian_mesh import CartesianMesh
from .cut_classification import ElementRegion, StraightEdge, CutTopology
from .nurbs_geometry import NurbsCurve, CurveSegment
from .utils import cross2, segments_cross, VisibilityError, InvertedMapError

MAX_VISIBILITY_ITERATIONS = 64
MIN_CURVE_SAMPLES = 6
CURVATURE_SAMPLING = 10.
PIECE_SAMPLES = 4
MIN_DIAGONAL_MARGIN = 0.05

_ANGLE_TOLERANCE = 1e-12
_FULL_TURN = 2. * math.pi - 1e-9


def gauss_legendre(n: int) -> Tuple[ndarray, ndarray]:
    """Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].

    >>> x, w = gauss_legendre(1)
    >>> x.tolist(), w.tolist()
    ([0.0], [2.0])
    """
    if n < 1:
        raise ValueError(f'Gauss-Legendre rule needs n >= 1, got {n}')
    return leggauss(n)


def curve_points(curve: NurbsCurve, n: int) -> int:
    """Points along a curve for a rule that needs n points along a straight edge.

    The integrand pulled back to the curve parameter grows in degree with the
    curve degree; rational curves get one more point.

    >>> curve_points(NurbsCurve(1, [0., 0., 1., 1.], [(0., 0.), (1., 0.)]), 4)
    4
    """
    return curve.degree * n + int(curve.is_rational)


def _unit_interval_rule(n: int) -> Tuple[ndarray, ndarray]:
    x, w = gauss_legendre(n)
    return 0.5 * (x + 1.), 0.5 * w


def outward_side(curve: NurbsCurve) -> str:
    """Side of the curve holding the region whose outward normal is used in integrals.

    This is the fluid side for boundary curves and the side of fluid 1 for
    interfaces, i.e. the normal points from fluid 1 towards fluid 2.
    """
    side = curve.interior_side
    if curve.is_interface and curve.fluid == 2:
        return 'left' if side == 'right' else 'right'
    return side


class LineRule:
    """Quadrature points along a line with unit normals.

    Attributes
    ----------
    points: n x 2 np.ndarray[float]
    weights: n np.ndarray[float]
        Include the length element.
    normals: n x 2 np.ndarray[float]
    curvatures: n np.ndarray[float] or None
        Divergence of the normal field, curve rules only.
    params: n np.ndarray[float] or None
        Curve parameters or face coordinates of the points.
    """

    def __init__(self, points: ndarray, weights: ndarray, normals: ndarray, curvatures: Optional[ndarray] = None,
                 params: Optional[ndarray] = None):
        self.points = points
        self.weights = weights
        self.normals = normals
        self.curvatures = curvatures
        self.params = params

    def __len__(self):
        return len(self.weights)

    @property
    def length(self) -> float:
        return float(np.sum(self.weights))

    def integrate(self, values: ndarray) -> ndarray:
        return np.tensordot(self.weights, values, axes=(0, 0))


class AreaRule:
    """Quadrature points over a region.

    Attributes
    ----------
    points: m x 2 np.ndarray[float]
    weights: m np.ndarray[float]
    degree: int
        Number of 1D points per direction the rule was built with.
    """

    def __init__(self, points: ndarray, weights: ndarray, degree: int):
        self.points = points
        self.weights = weights
        self.degree = degree

    @classmethod
    def empty(cls, degree: int = 0) -> 'AreaRule':
        return cls(np.zeros((0, 2)), np.zeros(0), degree)

    def __add__(self, other: 'AreaRule') -> 'AreaRule':
        return AreaRule(np.vstack((self.points, other.points)), np.concatenate((self.weights, other.weights)),
                        max(self.degree, other.degree))

    def __len__(self):
        return len(self.weights)

    @property
    def area(self) -> float:
        return float(np.sum(self.weights))

    def integrate(self, values: ndarray) -> ndarray:
        return np.tensordot(self.weights, values, axes=(0, 0))


def curve_rule(segment: CurveSegment, n: int, fluid_side: Optional[str] = None) -> LineRule:
    """Gauss-Legendre rule along a curve segment in its parametric space.

    Parameters
    ----------
    segment: CurveSegment
    n: int
        Number of points on a straight segment, see curve_points.
    fluid_side: str, optional
        'left' or 'right' of the parametrization; the normals are the outward
        normals of the region on that side. Defaults to outward_side(curve).
    """
    curve = segment.curve
    x, w = gauss_legendre(curve_points(curve, n))
    half = 0.5 * (segment.lambda_hi - segment.lambda_lo)
    lam = segment.lambda_lo + half * (x + 1.)
    normals, curvatures = curve.normal_and_curvature(lam, fluid_side or outward_side(curve))
    weights = w * half * curve.jacobian(lam)
    return LineRule(curve.evaluate(lam), weights, normals, curvatures, lam)


def face_rule(mesh: CartesianMesh, face: int, t0: float = -1., t1: float = 1., n: int = 4,
              normal: Optional[ndarray] = None) -> LineRule:
    """Gauss-Legendre rule on the portion [t0, t1] of a straight face.

    The normal defaults to the outward normal of the face owner.
    """
    x, w = gauss_legendre(n)
    t = t0 + 0.5 * (t1 - t0) * (x + 1.)
    points = mesh.face_point(face, t)
    weights = w * 0.5 * (t1 - t0) * 0.5 * mesh.face_length(face)
    if normal is None:
        axis = mesh.face_axis[face]
        normal = np.zeros(2)
        owner_center = mesh.element_center(mesh.face_owner[face])
        normal[axis] = 1. if mesh.face_start[face, axis] > owner_center[axis] else -1.
    return LineRule(points, weights, np.tile(normal, (n, 1)), params=t)


def square_rule(mesh: CartesianMesh, e: int, n: int) -> AreaRule:
    """Tensor Gauss-Legendre rule on a whole element."""
    x0, y0, x1, y1 = mesh.element_bounds(e)
    s, w = _unit_interval_rule(n)
    xs, ys = x0 + s * (x1 - x0), y0 + s * (y1 - y0)
    px, py = np.meshgrid(xs, ys, indexing='xy')
    weights = np.outer(w, w).ravel() * (x1 - x0) * (y1 - y0)
    return AreaRule(np.column_stack((px.ravel(), py.ravel())), weights, n)


class FanTriangle:
    """Triangle (apex, start, end) whose edge start -> end may be a curve.

    A curved triangle carries the curve and the parameters of start and end,
    the edge being traversed from lam_start to lam_end.
    """

    def __init__(self, apex: ndarray, start: ndarray, end: ndarray, curve: Optional[NurbsCurve] = None,
                 lam_start: Optional[float] = None, lam_end: Optional[float] = None):
        self.apex = np.asarray(apex, dtype=float)
        self.start = np.asarray(start, dtype=float)
        self.end = np.asarray(end, dtype=float)
        self.curve = curve
        self.lam_start = lam_start
        self.lam_end = lam_end

    @property
    def is_curved(self) -> bool:
        return self.curve is not None

    @property
    def vertices(self) -> ndarray:
        return np.array([self.apex, self.start, self.end])

    def rule(self, n: int) -> AreaRule:
        return curved_triangle_rule(self, n)


class TriangleFan:
    """Partition of a region into fan triangles.

    Attributes
    ----------
    triangles: List[FanTriangle]
    element: int
    label: int
    n_iterations: int
        Number of visibility passes used.
    """

    def __init__(self, triangles: List[FanTriangle], element: int = -1, label: Optional[int] = None,
                 n_iterations: int = 1):
        self.triangles = triangles
        self.element = element
        self.label = label
        self.n_iterations = n_iterations

    def __len__(self):
        return len(self.triangles)

    @property
    def n_curved(self) -> int:
        return sum(t.is_curved for t in self.triangles)

    def rule(self, n: int) -> AreaRule:
        rule = AreaRule.empty(n)
        for triangle in self.triangles:
            rule = rule + triangle.rule(n)
        return rule

    def area(self, n: int = 8) -> float:
        return self.rule(n).area


def curved_triangle_rule(triangle: FanTriangle, n: int) -> AreaRule:
    """Collapsed tensor rule with n points towards the apex and n along the edge.

    Straight triangles use the same map with the straight edge, which
    integrates polynomials of degree 2n - 2 exactly. Curved edges take
    curve_points(curve, n) points.

    Raises
    ------
    InvertedMapError
        If the Jacobian determinant is not positive at a quadrature point.
    """
    theta, wt = _unit_interval_rule(n)
    apex = triangle.apex
    if triangle.is_curved:
        s, ws = _unit_interval_rule(curve_points(triangle.curve, n))
        dlam = triangle.lam_end - triangle.lam_start
        lam = triangle.lam_start + s * dlam
        c = triangle.curve.evaluate(lam)
        d = triangle.curve.derivatives(lam)[0] * dlam
    else:
        s, ws = _unit_interval_rule(n)
        edge = triangle.end - triangle.start
        c = triangle.start + np.outer(s, edge)
        d = np.tile(edge, (n, 1))
    one_minus = 1. - theta
    points = one_minus[None, :, None] * c[:, None, :] + theta[None, :, None] * apex
    det = one_minus[None, :] * cross2(c - apex, d)[:, None]
    if np.any(det <= 0.):
        raise InvertedMapError(f'Fan triangle with apex {apex.tolist()} has a non-positive Jacobian '
                               f'(min {det.min():.3e})')
    weights = np.outer(ws, wt) * det
    return AreaRule(points.reshape(-1, 2), weights.ravel(), n)


class _LoopItem:
    """Edge of a region loop used by the visibility partition."""

    def __init__(self, start: ndarray, end: ndarray, curve: Optional[NurbsCurve] = None,
                 lam_start: Optional[float] = None, lam_end: Optional[float] = None, n_samples: int = 2):
        self.start = np.asarray(start, dtype=float)
        self.end = np.asarray(end, dtype=float)
        self.curve = curve
        self.lam_start = lam_start
        self.lam_end = lam_end
        self.n_samples = n_samples if curve is not None else 2

    @property
    def is_curved(self) -> bool:
        return self.curve is not None

    @property
    def n_increments(self) -> int:
        return self.n_samples - 1

    def params(self) -> ndarray:
        return np.linspace(self.lam_start, self.lam_end, self.n_samples)

    def points(self) -> ndarray:
        if not self.is_curved:
            return np.array([self.start, self.end])
        points = self.curve.evaluate(self.params())
        points[0], points[-1] = self.start, self.end
        return points

    def tangents(self) -> ndarray:
        """Derivatives along the direction of traversal."""
        return self.curve.derivatives(self.params())[0] * np.sign(self.lam_end - self.lam_start)

    def split_at_sample(self, k: int) -> Tuple['_LoopItem', '_LoopItem']:
        lam = self.params()[k]
        point = self.curve.evaluate(lam)
        n_a = max(3, k + 1)
        n_b = max(3, self.n_samples - k)
        return (_LoopItem(self.start, point, self.curve, self.lam_start, lam, n_a),
                _LoopItem(point, self.end, self.curve, lam, self.lam_end, n_b))

    def pieces(self) -> List['_LoopItem']:
        """The item cut at each of its samples."""
        if not self.is_curved:
            return [self]
        points, lam = self.points(), self.params()
        return [_LoopItem(points[i], points[i + 1], self.curve, lam[i], lam[i + 1], PIECE_SAMPLES)
                for i in range(self.n_increments)]

    def split_at_midpoint(self) -> Tuple['_LoopItem', '_LoopItem']:
        mid = 0.5 * (self.start + self.end)
        return _LoopItem(self.start, mid), _LoopItem(mid, self.end)

    def triangle(self, apex: ndarray) -> FanTriangle:
        return FanTriangle(apex, self.start, self.end, self.curve, self.lam_start, self.lam_end)


def curve_samples(segment: CurveSegment, curvature_based: bool = True) -> int:
    """Number of boundary samples of a curve segment for visibility tests.

    ceil(10 kappa_max l), at least 6, where kappa_max is the largest
    curvature magnitude and l the length of the segment.
    """
    if not curvature_based:
        return MIN_CURVE_SAMPLES
    lam = np.linspace(segment.lambda_lo, segment.lambda_hi, 16)
    _, kappa = segment.curve.normal_and_curvature(lam, 'left')
    length = segment.curve.arc_length(segment.lambda_lo, segment.lambda_hi)
    return max(MIN_CURVE_SAMPLES, int(math.ceil(CURVATURE_SAMPLING * float(np.max(np.abs(kappa))) * length)))


def _region_loop(region: ElementRegion, curvature_based: bool) -> List[_LoopItem]:
    items = []
    for edge in region.edges:
        if isinstance(edge, StraightEdge):
            items.append(_LoopItem(edge.start, edge.end))
        else:
            seg = edge.segment
            items.append(_LoopItem(edge.start, edge.end, seg.curve, edge.lambda_start, edge.lambda_end,
                                   curve_samples(seg, curvature_based)))
    return items


def _visible_count(apex: ndarray, item: _LoopItem) -> Tuple[int, float]:
    """Number of leading sample increments of item seen counterclockwise from apex, and their sweep."""
    points = item.points()
    v = points - apex
    increments = np.arctan2(cross2(v[:-1], v[1:]), np.sum(v[:-1] * v[1:], axis=1))
    ok = increments > _ANGLE_TOLERANCE
    if item.is_curved:
        t = item.tangents()
        orientation = cross2(v, t)
        scale = _ANGLE_TOLERANCE * np.linalg.norm(v, axis=1) * np.linalg.norm(t, axis=1)
        facing = orientation > scale
        # end points tangent to the ray from the apex are cusps of the region
        facing[[0, -1]] = orientation[[0, -1]] > -scale[[0, -1]]
        ok &= facing[:-1] & facing[1:]
    count = len(ok) if ok.all() else int(np.argmin(ok))
    return count, float(np.sum(increments[:count]))


def _star_fan(loop: List[_LoopItem], k: int) -> Optional[List[FanTriangle]]:
    """Fan from the start point of loop[k] if the loop is star-shaped with respect to it."""
    rotated = loop[k:] + loop[:k]
    if rotated[0].is_curved or rotated[-1].is_curved:
        return None
    apex = rotated[0].start
    total, triangles = 0., []
    for item in rotated[1:-1]:
        count, sweep = _visible_count(apex, item)
        if count < item.n_increments:
            return None
        total += sweep
        triangles.append(item.triangle(apex))
    if total >= _FULL_TURN:
        return None
    return triangles


def _apex_candidates(loop: List[_LoopItem]) -> List[Tuple[str, int]]:
    """Straight corners (lowest first), then midpoints of straight edges, longest first."""
    corners = []
    for i, item in enumerate(loop):
        previous = loop[i - 1]
        if item.is_curved or previous.is_curved:
            continue
        a, b = previous.end - previous.start, item.end - item.start
        if abs(cross2(a, b)) > 1e-12 * np.linalg.norm(a) * np.linalg.norm(b):
            corners.append(i)
    corners.sort(key=lambda i: (loop[i].start[1], loop[i].start[0]))
    straight = [i for i, item in enumerate(loop) if not item.is_curved]
    straight.sort(key=lambda i: -np.linalg.norm(loop[i].end - loop[i].start))
    return [('vertex', i) for i in corners] + [('mid', i) for i in straight]


def _with_apex(loop: List[_LoopItem], candidate: Tuple[str, int]) -> Tuple[List[_LoopItem], int]:
    kind, i = candidate
    if kind == 'vertex':
        return loop, i
    a, b = loop[i].split_at_midpoint()
    return loop[:i] + [a, b] + loop[i + 1:], i + 1


def _polyline(loop: List[_LoopItem]) -> ndarray:
    return np.vstack([item.points()[:-1] for item in loop])


def _valid_diagonal(loop: List[_LoopItem], p: ndarray, v: ndarray) -> bool:
    poly = _polyline(loop)
    scale = float(np.max(np.ptp(poly, axis=0)))
    d = v - p
    length = float(np.linalg.norm(d))
    if length < 1e-12 * scale:
        return False
    if np.any(segments_cross(p, v, poly, np.roll(poly, -1, axis=0), 1e-12 * scale ** 2)):
        return False
    along = (poly - p) @ d / length ** 2
    distance = np.abs(cross2(d, poly - p)) / length
    if np.any((along > 1e-9) & (along < 1. - 1e-9) & (distance < 1e-10 * scale)):
        return False
    path = Path(np.vstack((poly, poly[:1])))
    inner = p + np.outer([0.25, 0.5, 0.75], d)
    return bool(np.all(path.contains_points(inner)))


def _ccw_angle(u: ndarray, w: ndarray) -> float:
    return float(np.mod(np.arctan2(cross2(u, w), np.dot(u, w)), 2. * math.pi))


def _interior_margin(poly: ndarray, i: int, d: ndarray) -> float:
    """Smallest angle between direction d and the boundary at polyline vertex i, negative outside the region."""
    v = poly[i]
    before, after = poly[i - 1] - v, poly[(i + 1) % len(poly)] - v
    wedge = _ccw_angle(after, before)
    phi = _ccw_angle(after, d)
    return min(phi, wedge - phi)


def _best_diagonal(loop: List[_LoopItem], pairs: List[Tuple[int, int]],
                   min_margin: float) -> Optional[Tuple[int, int]]:
    """Valid diagonal between item start points that leaves the boundary at the widest angles."""
    poly = _polyline(loop)
    offsets = np.cumsum([0] + [item.n_increments for item in loop[:-1]])
    scored = []
    for a, b in pairs:
        d = loop[b].start - loop[a].start
        if not np.any(d):
            continue
        margin = min(_interior_margin(poly, offsets[a], d), _interior_margin(poly, offsets[b], -d))
        if margin > min_margin:
            scored.append((margin, a, b))
    for _, a, b in sorted(scored, reverse=True):
        if _valid_diagonal(loop, loop[a].start, loop[b].start):
            return a, b
    return None


def _refined(loop: List[_LoopItem]) -> List[_LoopItem]:
    return [piece for item in loop for piece in item.pieces()]


def _all_pairs(n: int) -> List[Tuple[int, int]]:
    return [(a, b) for a in range(n) for b in range(a + 2, n) if not (a == 0 and b == n - 1)]


def _last_visible(loop: List[_LoopItem], k: int) -> Tuple[List[_LoopItem], int]:
    """Loop rotated to the apex with the last point visible from it as a vertex, and its index."""
    rotated = loop[k:] + loop[:k]
    apex = rotated[0].start
    j = 1
    while j < len(rotated) - 1:
        count, _ = _visible_count(apex, rotated[j])
        if count < rotated[j].n_increments:
            if rotated[j].is_curved and count > 0:
                a, b = rotated[j].split_at_sample(count)
                rotated[j:j + 1] = [a, b]
                return rotated, j + 1
            return rotated, j
        j += 1
    return rotated, j


def _split(loop: List[_LoopItem], k: int):
    """Split the loop by a diagonal from the last point visible from loop[k].start."""
    rotated, p_index = _last_visible(loop, k)
    n = len(rotated)
    from_visible = [(p_index % n, (p_index + step) % n) for step in range(2, n - 1)]
    for pairs in (from_visible, _all_pairs(n)):
        best = _best_diagonal(rotated, pairs, MIN_DIAGONAL_MARGIN)
        if best is not None:
            return _split_at(rotated, *best)
    # curved edges may hide every vertex pair: split them at their samples
    refined = _refined(rotated)
    best = _best_diagonal(refined, _all_pairs(len(refined)), 0.)
    if best is not None:
        return _split_at(refined, *best)
    raise VisibilityError('No interior diagonal found to split a region that is not star-shaped')


def _split_at(loop: List[_LoopItem], a: int, b: int):
    n = len(loop)
    seq = loop[a:] + loop[:a]
    d = (b - a) % n
    p, v = seq[0].start, seq[d].start
    m = 0.5 * (p + v)
    loop_a = seq[:d] + [_LoopItem(v, m), _LoopItem(m, p)]
    loop_b = seq[d:] + [_LoopItem(p, m), _LoopItem(m, v)]
    return loop_a, len(loop_a) - 1, loop_b, len(loop_b) - 1


def _partition(loop: List[_LoopItem], counter: List[int], preferred: Optional[int] = None) -> List[FanTriangle]:
    counter[0] += 1
    if counter[0] > MAX_VISIBILITY_ITERATIONS:
        raise VisibilityError(f'Visibility partition did not finish within {MAX_VISIBILITY_ITERATIONS} passes')
    candidates = _apex_candidates(loop)
    if preferred is not None:
        candidates = [('vertex', preferred)] + candidates
    if not candidates:
        raise VisibilityError('Region loop has no straight edge to start the visibility partition from')
    for candidate in candidates:
        apex_loop, k = _with_apex(loop, candidate)
        fan = _star_fan(apex_loop, k)
        if fan is not None:
            return fan
    apex_loop, k = _with_apex(loop, candidates[0])
    loop_a, ma, loop_b, mb = _split(apex_loop, k)
    return _partition(loop_a, counter, ma) + _partition(loop_b, counter, mb)


def visibility_triangulate(region: ElementRegion, curvature_based_sampling: bool = True) -> TriangleFan:
    """Partition a region into fan triangles with at most one curved edge each.

    A fan is built from a start point (a corner of the element inside the
    region, else the midpoint of the longest straight edge) when every
    boundary sample is seen counterclockwise from it. Otherwise the region is
    split by the diagonal from the last visible point to a later vertex and
    both parts restart from the midpoint of that diagonal.

    Raises
    ------
    VisibilityError
        If the partition needs more than 64 passes.
    """
    counter = [0]
    triangles = _partition(_region_loop(region, curvature_based_sampling), counter)
    return TriangleFan(triangles, region.element, region.label, counter[0])


def region_rule(region: Optional[ElementRegion], n: int) -> AreaRule:
    """Quadrature over a region as the sum of its fan triangle rules."""
    if region is None:
        return AreaRule.empty(n)
    return visibility_triangulate(region).rule(n)


class CutQuadrature:
    """Quadrature rules of a cut topology.

    Fans are built once per region; rules are cached per number of points,
    which changes with the local degree.
    """

    def __init__(self, topology: CutTopology, curvature_based_sampling: bool = True):
        self.topology = topology
        self.curvature_based_sampling = curvature_based_sampling
        self._fans: Dict[Tuple[int, int], List[TriangleFan]] = {}
        self._element_rules: Dict[Tuple[int, int, int], AreaRule] = {}
        self._curve_rules: Dict[Tuple[int, int], List[Tuple[CurveSegment, LineRule]]] = {}

    def fans(self, e: int, label: int) -> List[TriangleFan]:
        key = (e, label)
        if key not in self._fans:
            self._fans[key] = [visibility_triangulate(r, self.curvature_based_sampling)
                               for r in self.topology.cells[e].regions_of(label)]
        return self._fans[key]

    def element_rule(self, e: int, label: int, n: int) -> AreaRule:
        """Rule over the part of element e occupied by the given fluid."""
        key = (e, label, n)
        if key not in self._element_rules:
            cell = self.topology.cells[e]
            if not cell.cut and label in cell.labels:
                rule = square_rule(self.topology.mesh, e, n)
            else:
                rule = AreaRule.empty(n)
                for fan in self.fans(e, label):
                    rule = rule + fan.rule(n)
            self._element_rules[key] = rule
        return self._element_rules[key]

    def curve_rules(self, e: int, n: int) -> List[Tuple[CurveSegment, LineRule]]:
        """Rules along every curve segment inside element e, normals as given by outward_side."""
        key = (e, n)
        if key not in self._curve_rules:
            self._curve_rules[key] = [(seg, curve_rule(seg, n)) for seg in self.topology.cells[e].segments]
        return self._curve_rules[key]
