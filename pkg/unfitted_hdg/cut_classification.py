# -*- coding: utf-8 -*-
"""Classification of the background grid against boundary and interface curves.

The pipeline is sample -> locate crossings -> split cut cells into regions ->
flood fill the labels of uncut cells -> select extensions of badly cut cells.
Labels are 0 for void (outside the fluid domain) and 1, 2 for the fluids.
"""
import math
import warnings
from collections import defaultdict, deque
from typing import List, Tuple, Dict, Optional, Sequence

import numpy as np
from numpy import ndarray
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq

from .cartesian_mesh import CartesianMesh, PeriodicPairing, neighbor, face_sides
from .nurbs_geometry import NurbsCurve, CurveChain, CurveSegment, chain_curves
from .utils import GeometryError, TopologyError, VertexDegeneracyError, cross2

VOID = 0
CLASSIFICATIONS = ('standard', 'immersed_boundary', 'interface', 'inactive')

DEFAULT_N_SAMPLES = 100
DEFAULT_ALPHA_MIN = 0.3
MIN_DONOR_BETA = 0.1
MAX_SAMPLING_REFINEMENTS = 3
VERTEX_TOLERANCE = 1e-12
SAMPLES_PER_ELEMENT = 8
DEFAULT_EXTENSION_WEIGHTS = {'area': 1., 'distance': 0.5, 'penalty': 1.}
TWO_FLUID_PENALTY = 4.
EXTENSION_RINGS = 2

_JOINT_SNAP = 1e-9
_BOX_TOLERANCE = 1e-10
_SIDE_STEPS = np.array([(0, -1), (1, 0), (0, 1), (-1, 0)])


class IntersectionPoint:
    """A crossing of a curve chain with a mesh line.

    Attributes
    ----------
    chain: int
        Index of the chain.
    t: float
        Chain parameter of the crossing.
    curve_id: int
        Curve holding the crossing, and its parameter lam.
    lam: float
    point: 2 np.ndarray[float]
    face: int
        Face crossed (principal id under periodic pairing).
    elements: Tuple[int, int]
        Element before and after the crossing along the chain, -1 outside the
        active part of the grid.
    on_boundary: bool
        True for the end points of open chains, which lie on the boundary of
        the active box.
    """

    def __init__(self, chain: int, t: float, curve_id: int, lam: float, point: ndarray, face: int,
                 elements: Tuple[int, int], on_boundary: bool = False):
        self.chain = chain
        self.t = t
        self.curve_id = curve_id
        self.lam = lam
        self.point = point
        self.face = face
        self.elements = elements
        self.on_boundary = on_boundary

    def __repr__(self):
        return (f'IntersectionPoint(chain={self.chain}, t={self.t:.12g}, point={self.point.tolist()}, '
                f'face={self.face}, elements={self.elements})')


class StraightEdge:
    """Straight part of a region boundary; face is None on virtual cell splits."""

    def __init__(self, start: ndarray, end: ndarray, face: Optional[int], side: Optional[int]):
        self.start = np.asarray(start, dtype=float)
        self.end = np.asarray(end, dtype=float)
        self.face = face
        self.side = side

    @property
    def is_virtual(self) -> bool:
        return self.face is None

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.end - self.start))

    def green_area(self) -> float:
        return 0.5 * float(cross2(self.start, self.end))


class CurveEdge:
    """Curved part of a region boundary, traversed against the curve if reverse."""

    def __init__(self, segment: CurveSegment, reverse: bool):
        self.segment = segment
        self.reverse = reverse

    @property
    def lambda_start(self) -> float:
        return self.segment.lambda_hi if self.reverse else self.segment.lambda_lo

    @property
    def lambda_end(self) -> float:
        return self.segment.lambda_lo if self.reverse else self.segment.lambda_hi

    @property
    def start(self) -> ndarray:
        return self.segment.curve.evaluate(self.lambda_start)

    @property
    def end(self) -> ndarray:
        return self.segment.curve.evaluate(self.lambda_end)

    def green_area(self, n: int = 20) -> float:
        seg = self.segment
        x, w = leggauss(n)
        half = 0.5 * (seg.lambda_hi - seg.lambda_lo)
        lam = seg.lambda_lo + half * (x + 1.)
        c = seg.curve.evaluate(lam)
        d = seg.curve.derivatives(lam)[0]
        value = 0.5 * half * float(np.sum(w * cross2(c, d)))
        return -value if self.reverse else value


class ElementRegion:
    """A connected part of an element (or of a virtual sub-cell) with one label.

    Attributes
    ----------
    element: int
    label: int
        0 for void, otherwise the fluid index.
    edges: list of StraightEdge and CurveEdge
        Closed counterclockwise boundary loop.
    area: float
    alpha: float
        area / |element|.
    """

    def __init__(self, element: int, label: Optional[int], edges: list, element_area: float):
        self.element = element
        self.label = label
        self.edges = edges
        self.area = sum(edge.green_area() for edge in edges)
        self.alpha = self.area / element_area
        if self.area <= 0:
            raise TopologyError(f'Region loop of element {element} is not counterclockwise (area {self.area})')

    @property
    def curve_edges(self) -> List[CurveEdge]:
        return [e for e in self.edges if isinstance(e, CurveEdge)]

    @property
    def straight_edges(self) -> List[StraightEdge]:
        return [e for e in self.edges if isinstance(e, StraightEdge)]

    def vertices(self) -> ndarray:
        """Start points of the edges."""
        return np.array([e.start for e in self.edges])


class CurvePiece:
    """Part of a chain between consecutive crossings, lying in one element.

    Chain parameters of closed chains wrap around, i.e. t_hi may exceed the
    number of curves.
    """

    def __init__(self, chain_index: int, chain: CurveChain, t_lo: float, t_hi: float, element: int,
                 start_point: Optional[ndarray] = None, end_point: Optional[ndarray] = None):
        self.chain_index = chain_index
        self.chain = chain
        self.t_lo = t_lo
        self.t_hi = t_hi
        self.element = element
        self.start_point = start_point
        self.end_point = end_point

    @property
    def is_floating(self) -> bool:
        return self.start_point is None

    @property
    def side_labels(self) -> Tuple[int, int]:
        return self.chain.curves[0].side_labels()

    def evaluate(self, t) -> ndarray:
        return _chain_points(self.chain, t)

    def segments(self) -> List[CurveSegment]:
        n = self.chain.n_curves
        segments = []
        for k in range(int(math.floor(self.t_lo)), int(math.ceil(self.t_hi))):
            a, b = max(self.t_lo, k), min(self.t_hi, k + 1)
            if b - a > 1e-12:
                index = k % n
                segments.append(CurveSegment(self.chain.curves[index], self.chain.curve_ids[index],
                                             a - k, b - k, self.element))
        return segments


class CutCell:
    """Cut information of one element.

    Attributes
    ----------
    element: int
    classification: str
        One of CLASSIFICATIONS.
    regions: List[ElementRegion]
    segments: List[CurveSegment]
        Curve segments inside the element, each once.
    crossings: List[IntersectionPoint]
    virtual_lines: List[float]
        Abscissae of the virtual splits used for floating loops.
    """

    def __init__(self, element: int, regions: List[ElementRegion], segments: List[CurveSegment] = (),
                 crossings: List[IntersectionPoint] = (), virtual_lines: Sequence[float] = (),
                 cut: bool = False):
        self.element = element
        self.regions = list(regions)
        self.segments = list(segments)
        self.crossings = list(crossings)
        self.virtual_lines = list(virtual_lines)
        self.cut = cut
        self.classification = 'inactive'

    @property
    def labels(self) -> List[int]:
        """Fluid labels present in the element."""
        return sorted({r.label for r in self.regions if r.label not in (None, VOID)})

    def area(self, label: int) -> float:
        return sum(r.area for r in self.regions if r.label == label)

    def regions_of(self, label: int) -> List[ElementRegion]:
        return [r for r in self.regions if r.label == label]


def _chain_points(chain: CurveChain, t) -> ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if chain.closed:
        t = np.mod(t, chain.n_curves)
    return chain.evaluate(t)


def _chain_point(chain: CurveChain, t: float) -> ndarray:
    return _chain_points(chain, t)[0]


def _cells_of(mesh: CartesianMesh, points: ndarray) -> ndarray:
    """Grid indices (i, j) of points, clamped to the active box."""
    i0, j0, i1, j1 = mesh.active_box
    ij = np.floor((np.atleast_2d(points) - mesh.origin) / mesh.h).astype(int)
    ij[:, 0] = np.clip(ij[:, 0], i0, i1 - 1)
    ij[:, 1] = np.clip(ij[:, 1], j0, j1 - 1)
    return ij


def _chain_samples(chain: CurveChain, mesh: CartesianMesh, n_samples: int) -> Tuple[ndarray, ndarray]:
    h = float(np.min(mesh.h))
    params = []
    for i, curve in enumerate(chain.curves):
        n = max(n_samples, int(math.ceil(SAMPLES_PER_ELEMENT * curve.arc_length() / h)))
        params.append(i + np.arange(n) / n)
    params.append([float(chain.n_curves)])
    t = np.concatenate(params)
    return t, _chain_points(chain, t)


def _box_distance(mesh: CartesianMesh, points: ndarray) -> ndarray:
    """Signed distance of points to the boundary of the active box, positive inside."""
    x0, y0, x1, y1 = mesh.active_bounds
    return np.min(np.column_stack((points[:, 0] - x0, x1 - points[:, 0], points[:, 1] - y0, y1 - points[:, 1])),
                  axis=1)


def _check_chain_placement(chain: CurveChain, mesh: CartesianMesh, points: ndarray) -> None:
    distance = _box_distance(mesh, points)
    scale = VERTEX_TOLERANCE * float(np.max(mesh.h))
    if chain.is_interface and not chain.closed:
        raise GeometryError(f'Interface curves {chain.curve_ids} must form a closed loop')
    if chain.closed:
        if np.any(distance <= scale):
            kind = 'interface' if chain.is_interface else 'boundary'
            raise GeometryError(f'Closed {kind} curves {chain.curve_ids} must lie strictly inside the '
                                f'active part of the grid')
    else:
        if abs(distance[0]) > _BOX_TOLERANCE or abs(distance[-1]) > _BOX_TOLERANCE:
            raise GeometryError(f'Open boundary curves {chain.curve_ids} must start and end on the boundary '
                                f'of the active part of the grid')
        if np.any(distance[1:-1] < -_BOX_TOLERANCE):
            raise GeometryError(f'Open boundary curves {chain.curve_ids} leave the active part of the grid')


def sample_and_mark(curves: Sequence[NurbsCurve], mesh: CartesianMesh,
                    n_samples: int = DEFAULT_N_SAMPLES) -> List[int]:
    """Elements containing at least one curve sample point.

    Every curve is sampled at lambda_k = k / n with n = max(n_samples, 8 length / h).
    Only interfaces are checked here, they must stay strictly inside the
    active part of the grid; the full placement checks run when crossings are
    located.
    """
    marked = set()
    scale = VERTEX_TOLERANCE * float(np.max(mesh.h))
    for chain in chain_curves(curves):
        _, points = _chain_samples(chain, mesh, n_samples)
        if chain.is_interface and np.any(_box_distance(mesh, points) <= scale):
            raise GeometryError(f'Interface curves {chain.curve_ids} leave the active part of the grid')
        for i, j in _cells_of(mesh, points):
            marked.add(mesh.element_id(i, j))
    return sorted(marked)


class _CrossingLocator:
    """Bisection of chain parameter intervals whose end points lie in different cells."""

    def __init__(self, mesh: CartesianMesh, pairing: PeriodicPairing, chain: CurveChain, chain_index: int):
        self.mesh = mesh
        self.pairing = pairing
        self.chain = chain
        self.chain_index = chain_index
        self.h = float(np.max(mesh.h))

    def cell(self, t: float) -> ndarray:
        return _cells_of(self.mesh, _chain_point(self.chain, t))[0]

    def between(self, ta: float, tb: float, ca: ndarray, cb: ndarray, depth: int = 0) -> List[IntersectionPoint]:
        jump = np.abs(cb - ca)
        if jump.sum() == 0:
            return []
        if jump.sum() == 1:
            return [self._on_line(ta, tb, ca, cb, int(np.argmax(jump)))]
        if depth < MAX_SAMPLING_REFINEMENTS:
            tm = 0.5 * (ta + tb)
            cm = self.cell(tm)
            return self.between(ta, tm, ca, cm, depth + 1) + self.between(tm, tb, cm, cb, depth + 1)
        if tuple(jump) == (1, 1):
            return self._diagonal(ta, tb, ca, cb)
        raise TopologyError(f'Curves {self.chain.curve_ids} jump from cell {tuple(ca)} to {tuple(cb)} '
                            f'near t={ta:.6g}; sampling refinement failed')

    def _root(self, ta: float, tb: float, axis: int, line: float) -> float:
        def g(t):
            return _chain_point(self.chain, t)[axis] - line

        ga, gb = g(ta), g(tb)
        if ga * gb > 0:
            return ta if abs(ga) < abs(gb) else tb
        if ga == 0:
            return ta
        if gb == 0:
            return tb
        return brentq(g, ta, tb, xtol=1e-15, rtol=4 * np.finfo(float).eps)

    def _line_coordinate(self, ca: ndarray, cb: ndarray, axis: int) -> Tuple[int, float]:
        index = max(ca[axis], cb[axis])
        return index, float(self.mesh.origin[axis] + self.mesh.h[axis] * index)

    def _on_line(self, ta: float, tb: float, ca: ndarray, cb: ndarray, axis: int) -> IntersectionPoint:
        index, line = self._line_coordinate(ca, cb, axis)
        t = self._root(ta, tb, axis, line)
        k = round(t)
        if abs(t - k) < _JOINT_SNAP and 0 <= k <= self.chain.n_curves and \
                abs(_chain_point(self.chain, k)[axis] - line) < VERTEX_TOLERANCE * self.h:
            t = float(k)
        return self._make(t, ca, cb, axis, index, line)

    def _make(self, t: float, ca: ndarray, cb: ndarray, axis: int, index: int, line: float) -> IntersectionPoint:
        mesh = self.mesh
        point = _chain_point(self.chain, t).copy()
        point[axis] = line
        other = 1 - axis
        r = (point[other] - mesh.origin[other]) / mesh.h[other]
        if abs(r - round(r)) * mesh.h[other] < VERTEX_TOLERANCE * self.h:
            raise VertexDegeneracyError(f'Curves {self.chain.curve_ids} pass through the mesh vertex near '
                                        f'{point.tolist()}; shift the grid origin slightly')
        if axis == 0:
            face = mesh.vertical_face(index, int(ca[1]))
        else:
            face = mesh.horizontal_face(int(ca[0]), index)
        return self._intersection(t, point, self.pairing.principal(face),
                                  (mesh.element_id(*ca), mesh.element_id(*cb)))

    def _intersection(self, t: float, point: ndarray, face: int, elements: Tuple[int, int],
                      on_boundary: bool = False) -> IntersectionPoint:
        index, lam = self.chain.locate(t % self.chain.n_curves if self.chain.closed else t)
        return IntersectionPoint(self.chain_index, t, self.chain.curve_ids[index], lam, point, face, elements,
                                 on_boundary)

    def _diagonal(self, ta: float, tb: float, ca: ndarray, cb: ndarray) -> List[IntersectionPoint]:
        ix, x_line = self._line_coordinate(ca, cb, 0)
        iy, y_line = self._line_coordinate(ca, cb, 1)
        tx = self._root(ta, tb, 0, x_line)
        ty = self._root(ta, tb, 1, y_line)
        px, py = _chain_point(self.chain, tx), _chain_point(self.chain, ty)
        if np.linalg.norm(px - py) < VERTEX_TOLERANCE * self.h:
            raise VertexDegeneracyError(f'Curves {self.chain.curve_ids} pass through the mesh vertex near '
                                        f'{px.tolist()}; shift the grid origin slightly')
        if tx < ty:
            cm = np.array([cb[0], ca[1]])
            return [self._make(tx, ca, cm, 0, ix, x_line), self._make(ty, cm, cb, 1, iy, y_line)]
        cm = np.array([ca[0], cb[1]])
        return [self._make(ty, ca, cm, 1, iy, y_line), self._make(tx, cm, cb, 0, ix, x_line)]

    def end_point(self, t: float) -> IntersectionPoint:
        """Crossing record of an open chain end point on the boundary of the active box."""
        mesh = self.mesh
        point = _chain_point(self.chain, t)
        ca = _cells_of(mesh, point)[0]
        e = mesh.element_id(*ca)
        x0, y0, x1, y1 = mesh.element_bounds(e)
        distances = [abs(point[1] - y0), abs(point[0] - x1), abs(point[1] - y1), abs(point[0] - x0)]
        side = int(np.argmin(distances))
        face = self.pairing.principal(mesh.element_faces(e)[side])
        elements = (-1, e) if t == 0. else (e, -1)
        return self._intersection(t, point, face, elements, on_boundary=True)


def locate_intersections(curves: Sequence[NurbsCurve], mesh: CartesianMesh,
                         n_samples: int = DEFAULT_N_SAMPLES,
                         pairing: Optional[PeriodicPairing] = None) -> List[IntersectionPoint]:
    """All crossings of the curves with mesh lines, ordered along each chain."""
    pairing = pairing or PeriodicPairing()
    crossings = []
    for index, chain in enumerate(chain_curves(curves)):
        crossings += _chain_crossings(chain, index, mesh, pairing, n_samples)
    return crossings


def _chain_crossings(chain: CurveChain, index: int, mesh: CartesianMesh, pairing: PeriodicPairing,
                     n_samples: int) -> List[IntersectionPoint]:
    t, points = _chain_samples(chain, mesh, n_samples)
    _check_chain_placement(chain, mesh, points)
    cells = _cells_of(mesh, points)
    locator = _CrossingLocator(mesh, pairing, chain, index)
    crossings = []
    if not chain.closed:
        crossings.append(locator.end_point(0.))
    for k in range(len(t) - 1):
        crossings += locator.between(t[k], t[k + 1], cells[k], cells[k + 1])
    if chain.closed:
        # t = n and t = 0 are the same point
        for c in crossings:
            if c.t >= chain.n_curves:
                c.t -= chain.n_curves
        crossings.sort(key=lambda c: c.t)
    else:
        crossings.append(locator.end_point(float(chain.n_curves)))
    return crossings


def _chain_pieces(chain: CurveChain, index: int, crossings: List[IntersectionPoint],
                  mesh: CartesianMesh) -> List[CurvePiece]:
    n = chain.n_curves
    if chain.closed and not crossings:
        _, points = _chain_samples(chain, mesh, 16)
        e = mesh.element_id(*_cells_of(mesh, np.mean(points, axis=0))[0])
        return [CurvePiece(index, chain, 0., float(n), e)]
    if chain.closed and len(crossings) % 2:
        raise TopologyError(f'Closed curves {chain.curve_ids} cross the mesh an odd number of times')
    bounds = [(c.t, c) for c in crossings]
    if chain.closed:
        bounds.append((bounds[0][0] + n, bounds[0][1]))
    pieces = []
    for (t_lo, c_lo), (t_hi, c_hi) in zip(bounds[:-1], bounds[1:]):
        if t_hi - t_lo <= 1e-14:
            raise TopologyError(f'Curves {chain.curve_ids} cross mesh lines twice at t={t_lo:.12g}')
        midpoint = _chain_point(chain, 0.5 * (t_lo + t_hi))
        e = mesh.element_id(*_cells_of(mesh, midpoint)[0])
        if c_lo.elements[1] != e or c_hi.elements[0] != e:
            raise TopologyError(f'Crossings of curves {chain.curve_ids} at t={t_lo:.6g} and t={t_hi:.6g} '
                                f'are not paired in element {e}')
        pieces.append(CurvePiece(index, chain, t_lo, t_hi, e, c_lo.point, c_hi.point))
    return pieces


def _split_pieces_at_line(pieces: List[CurvePiece], x_line: float) -> List[CurvePiece]:
    result = []
    for piece in pieces:
        ts = np.linspace(piece.t_lo, piece.t_hi, 65)
        g = piece.evaluate(ts)[:, 0] - x_line
        roots = []
        for k in range(len(ts) - 1):
            if g[k] * g[k + 1] < 0:
                roots.append(brentq(lambda t: piece.evaluate(t)[0, 0] - x_line, ts[k], ts[k + 1], xtol=1e-15,
                                    rtol=4 * np.finfo(float).eps))
            elif g[k + 1] == 0 and 0 < k + 1 < len(ts) - 1:
                roots.append(ts[k + 1])
        if not roots:
            result.append(piece)
            continue

        def snapped(t):
            point = piece.evaluate(t)[0].copy()
            point[0] = x_line
            return point

        if piece.is_floating:
            if len(roots) % 2:
                raise TopologyError(f'Floating loop crosses the virtual split at x={x_line} an odd number '
                                    f'of times')
            n = piece.chain.n_curves
            bounds = roots + [roots[0] + n]
            points = [snapped(t) for t in bounds]
        else:
            bounds = [piece.t_lo] + roots + [piece.t_hi]
            points = [piece.start_point] + [snapped(t) for t in roots] + [piece.end_point]
        for k in range(len(bounds) - 1):
            result.append(CurvePiece(piece.chain_index, piece.chain, bounds[k], bounds[k + 1], piece.element,
                                     points[k], points[k + 1]))
    return result


def _perimeter(rect: Tuple[float, float, float, float], point: ndarray) -> float:
    """Counterclockwise perimeter coordinate in [0, 4) of a point on the rectangle boundary."""
    x0, y0, x1, y1 = rect
    w, h = x1 - x0, y1 - y0
    x, y = point
    side = int(np.argmin([abs(y - y0), abs(x - x1), abs(y - y1), abs(x - x0)]))
    if side == 0:
        s = min(max((x - x0) / w, 0.), 1.)
    elif side == 1:
        s = 1. + min(max((y - y0) / h, 0.), 1.)
    elif side == 2:
        s = 2. + min(max((x1 - x) / w, 0.), 1.)
    else:
        s = 3. + min(max((y1 - y) / h, 0.), 1.)
    return s % 4.


def _boundary_walk(rect, s_from: float, p_from: ndarray, gap: float, p_to: ndarray,
                   side_faces: Sequence[Optional[int]]) -> List[StraightEdge]:
    """Straight edges along the rectangle boundary going counterclockwise by gap from s_from."""
    x0, y0, x1, y1 = rect
    corners = [np.array([x0, y0]), np.array([x1, y0]), np.array([x1, y1]), np.array([x0, y1])]
    s_to = s_from + gap
    points = [(s_from, p_from)]
    for c in range(int(math.floor(s_from)) + 1, int(math.ceil(s_to))):
        points.append((float(c), corners[c % 4]))
    points.append((s_to, p_to))
    edges = []
    for (sa, pa), (sb, pb) in zip(points[:-1], points[1:]):
        if np.linalg.norm(pb - pa) <= 1e-14 * max(x1 - x0, y1 - y0):
            continue
        side = int(math.floor(0.5 * (sa + sb))) % 4
        edges.append(StraightEdge(pa, pb, side_faces[side], side))
    return edges


def _walk_rectangle(element: int, rect, chords: List[CurvePiece], side_faces: Sequence[Optional[int]],
                    element_area: float) -> List[ElementRegion]:
    """Regions of a rectangle cut by chords running between points of its boundary."""
    x0, y0, x1, y1 = rect
    if not chords:
        corners = [np.array([x0, y0]), np.array([x1, y0]), np.array([x1, y1]), np.array([x0, y1])]
        edges = [StraightEdge(corners[s], corners[(s + 1) % 4], side_faces[s], s) for s in range(4)]
        return [ElementRegion(element, None, edges, element_area)]

    # events: (perimeter coordinate, chord index, True at the chord start)
    events = []
    for k, chord in enumerate(chords):
        events.append((_perimeter(rect, chord.start_point), k, True))
        events.append((_perimeter(rect, chord.end_point), k, False))

    def next_event(s: float, arrival: Tuple[int, bool]):
        candidates = [ev for ev in events if (ev[1], ev[2]) != arrival]
        return min(candidates, key=lambda ev: (ev[0] - s) % 4.)

    segments = [chord.segments() for chord in chords]
    unused = {(k, forward) for k in range(len(chords)) for forward in (True, False)}
    regions = []
    while unused:
        first = min(unused)
        dart = first
        edges, labels = [], set()
        for _ in range(len(events) + 1):
            unused.discard(dart)
            k, forward = dart
            chord = chords[k]
            if forward:
                edges += [CurveEdge(seg, False) for seg in segments[k]]
                labels.add(chord.side_labels[0])
                arrival_point, arrival = chord.end_point, (k, False)
            else:
                edges += [CurveEdge(seg, True) for seg in reversed(segments[k])]
                labels.add(chord.side_labels[1])
                arrival_point, arrival = chord.start_point, (k, True)
            s_arrival = _perimeter(rect, arrival_point)
            s_next, k_next, is_start = next_event(s_arrival, arrival)
            next_point = chords[k_next].start_point if is_start else chords[k_next].end_point
            edges += _boundary_walk(rect, s_arrival, arrival_point, (s_next - s_arrival) % 4., next_point,
                                    side_faces)
            dart = (k_next, is_start)
            if dart == first:
                break
            if dart not in unused:
                raise TopologyError(f'Region loop in element {element} does not close')
        else:
            raise TopologyError(f'Region loop in element {element} does not close')
        if len(labels) != 1:
            raise TopologyError(f'Conflicting labels {sorted(labels)} for one region of element {element}')
        regions.append(ElementRegion(element, labels.pop(), edges, element_area))
    return regions


def split_regions(mesh: CartesianMesh, element: int, pieces: List[CurvePiece],
                  pairing: Optional[PeriodicPairing] = None) -> Tuple[List[ElementRegion], List[float]]:
    """Regions of an element cut by curve pieces, and the virtual split abscissae used.

    Floating loops (closed chains inside the element) are cut by a virtual
    vertical line through their mean abscissa; the element is then processed
    as sub-cells whose shared edges carry no face.
    """
    pairing = pairing or PeriodicPairing()
    x0, y0, x1, y1 = mesh.element_bounds(element)
    lines = []
    for piece in pieces:
        if piece.is_floating:
            _, points = _chain_samples(piece.chain, mesh, 64)
            lines.append(float(np.mean(points[:, 0])))
    lines = sorted(lines)
    for x_line in lines:
        pieces = _split_pieces_at_line(pieces, x_line)
    if any(p.is_floating for p in pieces):
        raise TopologyError(f'A floating loop in element {element} was not split')

    faces = mesh.element_faces(element)
    abscissae = [x0] + lines + [x1]
    regions = []
    for q in range(len(abscissae) - 1):
        rect = (abscissae[q], y0, abscissae[q + 1], y1)
        side_faces = (faces[0], faces[1] if q == len(abscissae) - 2 else None, faces[2],
                      faces[3] if q == 0 else None)
        chords = [p for p in pieces if rect[0] <= p.evaluate(0.5 * (p.t_lo + p.t_hi))[0, 0] <= rect[2]]
        regions += _walk_rectangle(element, rect, chords, side_faces, mesh.element_area)
    _label_virtual_neighbors(regions)
    return regions, lines


def _label_virtual_neighbors(regions: List[ElementRegion]) -> None:
    """Unlabelled sub-cell regions take the label of the region across a virtual edge."""
    pending = [r for r in regions if r.label is None]
    progress = True
    while pending and progress and len(pending) < len(regions):
        progress = False
        for region in pending:
            for edge in region.straight_edges:
                if not edge.is_virtual:
                    continue
                mid = 0.5 * (edge.start + edge.end)
                for other in regions:
                    if other.label is None:
                        continue
                    for oe in other.straight_edges:
                        if oe.is_virtual and abs(oe.start[0] - mid[0]) < 1e-14 and \
                                min(oe.start[1], oe.end[1]) <= mid[1] <= max(oe.start[1], oe.end[1]):
                            region.label = other.label
                if region.label is not None:
                    break
        still = [r for r in pending if r.label is None]
        progress = len(still) < len(pending)
        pending = still


def _face_portions(mesh: CartesianMesh, region: ElementRegion) -> List[tuple]:
    """(face, t0, t1, label) of the region along faces, faces not aliased by periodic pairing."""
    portions = []
    for edge in region.straight_edges:
        if edge.is_virtual:
            continue
        t = mesh.face_coordinate(edge.face, np.array([edge.start, edge.end]))
        portions.append((edge.face, float(min(t)), float(max(t)), region.label))
    return portions


def _merge_portions(portions: List[tuple]) -> List[tuple]:
    merged = []
    for t0, t1, label in sorted(portions):
        if merged and merged[-1][2] == label and abs(merged[-1][1] - t0) < 1e-12:
            merged[-1] = (merged[-1][0], t1, label)
        else:
            merged.append((t0, t1, label))
    return merged


def propagate_fluid(mesh: CartesianMesh, cells: Dict[int, CutCell], face_labels: Dict[Tuple[int, int], int],
                    pairing: Optional[PeriodicPairing] = None) -> Dict[int, int]:
    """Labels of the uncut active elements by flood fill across their faces.

    Parameters
    ----------
    mesh: CartesianMesh
    cells: Dict[int, CutCell]
        The cut elements.
    face_labels: Dict[Tuple[int, int], int]
        (uncut element, side) -> label seen across that side in a cut neighbor.
    pairing: PeriodicPairing

    Returns
    -------
    labels: Dict[int, int]
        Label of every uncut active element; components without any seed are fluid 1.
    """
    pairing = pairing or PeriodicPairing()
    uncut = [e for e in range(mesh.n_elements) if mesh.is_active(e) and e not in cells]
    labels = {}
    seeds = defaultdict(set)
    for (e, _), label in face_labels.items():
        seeds[e].add(label)
    for e, found in seeds.items():
        if len(found) > 1:
            raise TopologyError(f'Element {e} inherits conflicting labels {sorted(found)}')

    uncut_set = set(uncut)
    for start in uncut:
        if start in labels:
            continue
        component, queue = [], deque([start])
        visited = {start}
        while queue:
            e = queue.popleft()
            component.append(e)
            for side in range(4):
                nb = neighbor(mesh, e, side, pairing)
                if nb in uncut_set and nb not in visited and mesh.is_active(nb):
                    visited.add(nb)
                    queue.append(nb)
        found = set()
        for e in component:
            found |= seeds.get(e, set())
        if len(found) > 1:
            raise TopologyError(f'Connected uncut elements around {start} inherit conflicting labels '
                                f'{sorted(found)}')
        label = found.pop() if found else 1
        for e in component:
            labels[e] = label
    return labels


class CutTopology:
    """Immutable result of the classification.

    Attributes
    ----------
    mesh: CartesianMesh
    pairing: PeriodicPairing
    curves: List[NurbsCurve]
    chains: List[CurveChain]
    cells: List[CutCell]
        One entry per element.
    face_portions: Dict[int, List[Tuple[float, float, int]]]
        Principal face id -> (t0, t1, label) portions in face coordinates.
    intersections: List[IntersectionPoint]
    alpha_min: float
    extension: Dict[Tuple[int, int], int]
        (receiver element, fluid) -> donor element.
    unextended: List[Tuple[int, int]]
        Badly cut (element, fluid) pairs without any donor.
    extension_weights: Dict[str, float]
    """

    def __init__(self, mesh: CartesianMesh, pairing: PeriodicPairing, curves: List[NurbsCurve],
                 chains: List[CurveChain], cells: List[CutCell],
                 face_portions: Dict[int, List[Tuple[float, float, int]]],
                 intersections: List[IntersectionPoint], alpha_min: float):
        self.mesh = mesh
        self.pairing = pairing
        self.curves = list(curves)
        self.chains = chains
        self.cells = cells
        self.face_portions = face_portions
        self.intersections = intersections
        self.alpha_min = alpha_min
        self.extension = {}
        self.unextended = []
        self.extension_weights = dict(DEFAULT_EXTENSION_WEIGHTS)

    @property
    def n_elements(self) -> int:
        return self.mesh.n_elements

    def classification(self, e: int) -> str:
        return self.cells[e].classification

    def labels(self, e: int) -> List[int]:
        return self.cells[e].labels

    def is_active(self, e: int) -> bool:
        return e >= 0 and self.cells[e].classification != 'inactive'

    def active_elements(self) -> List[int]:
        return [e for e in range(self.n_elements) if self.is_active(e)]

    @property
    def is_two_fluid(self) -> bool:
        return any(c.classification == 'interface' for c in self.cells) or \
            any(2 in c.labels for c in self.cells)

    def alpha(self, e: int, label: int) -> float:
        return self.cells[e].area(label) / self.mesh.element_area

    def beta(self, f: int, label: int) -> float:
        return sum(0.5 * (t1 - t0) for t0, t1, lab in self.face_portions.get(f, []) if lab == label)

    def face_neighbors(self, e: int) -> List[Tuple[int, int, int]]:
        """(side, principal face, neighbor element or -1) for the four sides of e."""
        faces = self.mesh.element_faces(e)
        return [(side, self.pairing.principal(faces[side]), neighbor(self.mesh, e, side, self.pairing))
                for side in range(4)]

    def fluid_neighborhood(self, e: int, label: int, rings: int) -> List[Tuple[int, ndarray]]:
        """Elements holding fluid label within the given number of rings around e, with their grid offsets.

        Only elements reached from e through faces wetted by the fluid count.
        """
        offsets = {e: np.zeros(2, dtype=int)}
        queue = deque([e])
        while queue:
            a = queue.popleft()
            for side, f, d in self.face_neighbors(a):
                if d < 0 or d in offsets or not self.is_active(d) or label not in self.labels(d):
                    continue
                offset = offsets[a] + _SIDE_STEPS[side]
                if np.max(np.abs(offset)) > rings or self.beta(f, label) <= 0.:
                    continue
                offsets[d] = offset
                queue.append(d)
        return [(d, offset) for d, offset in offsets.items() if d != e]

    def field_host(self, e: int, label: int) -> int:
        """Element whose polynomial space approximates fluid label in element e."""
        return self.extension.get((e, label), e)

    def fields(self) -> Dict[Tuple[int, int], List[int]]:
        """(host element, fluid) -> elements whose fluid region is approximated by that host."""
        result = defaultdict(list)
        for e in self.active_elements():
            for label in self.labels(e):
                result[(self.field_host(e, label), label)].append(e)
        return dict(sorted(result.items()))

    def patches(self) -> List[List[int]]:
        """Groups of active elements joined by extension, each solved as one local problem."""
        parent = {e: e for e in self.active_elements()}

        def find(e):
            while parent[e] != e:
                parent[e] = parent[parent[e]]
                e = parent[e]
            return e

        for (receiver, _), donor in self.extension.items():
            a, b = find(receiver), find(donor)
            if a != b:
                parent[max(a, b)] = min(a, b)
        groups = defaultdict(list)
        for e in parent:
            groups[find(e)].append(e)
        return [sorted(g) for _, g in sorted(groups.items())]

    def hybrid_portions(self) -> Dict[Tuple[int, int], List[Tuple[float, float]]]:
        """(face, fluid) -> face coordinate intervals carrying hybrid unknowns.

        A portion carries unknowns when both sides are active and belong to
        different fields, or when a periodic face joins an element to itself.
        """
        result = defaultdict(list)
        for f, portions in sorted(self.face_portions.items()):
            owner, other = face_sides(self.mesh, f, self.pairing)
            if not (self.is_active(owner) and self.is_active(other)):
                continue
            for t0, t1, label in portions:
                if label == VOID:
                    continue
                if owner == other or self.field_host(owner, label) != self.field_host(other, label):
                    result[(f, label)].append((t0, t1))
        return dict(result)

    def to_csv_rows(self) -> List[Dict[str, object]]:
        """Flat rows of the classification for a debug dump."""
        rows = []
        for cell in self.cells:
            alphas = ';'.join(f'{label}:{self.alpha(cell.element, label):.6g}' for label in cell.labels)
            rows.append({'kind': 'element', 'id': cell.element, 'classification': cell.classification,
                         'labels': ';'.join(str(label) for label in cell.labels), 'value': alphas})
        for f, portions in sorted(self.face_portions.items()):
            for label in sorted({lab for _, _, lab in portions if lab != VOID}):
                rows.append({'kind': 'face', 'id': f, 'classification': '', 'labels': str(label),
                             'value': f'{self.beta(f, label):.6g}'})
        for (e, label), donor in sorted(self.extension.items()):
            rows.append({'kind': 'extension', 'id': e, 'classification': 'receiver', 'labels': str(label),
                         'value': str(donor)})
        for e, label in self.unextended:
            rows.append({'kind': 'extension', 'id': e, 'classification': 'unextended', 'labels': str(label),
                         'value': ''})
        for name, weight in sorted(self.extension_weights.items()):
            rows.append({'kind': 'weight', 'id': '', 'classification': name, 'labels': '', 'value': f'{weight:.6g}'})
        return rows


def select_extensions(topology: CutTopology, alpha_min: float = DEFAULT_ALPHA_MIN,
                      weights: Optional[Dict[str, float]] = None
                      ) -> Tuple[Dict[Tuple[int, int], int], List[Tuple[int, int]]]:
    """Choose a donor for every badly cut (element, fluid) pair.

    Receivers are processed in element order. A donor holds the same fluid
    with alpha >= alpha_min and is, by preference, a face neighbor sharing a
    face portion with beta >= 0.1, else an element within two rings reached
    through faces wetted by the fluid. The donor maximizing

        w_area (alpha_e + alpha_d) - w_distance dist / h - w_penalty count_d

    is chosen, ties going to the lowest element id. Badly cut cells left
    without donor, as in a droplet smaller than alpha_min elements, are
    aggregated onto the largest badly cut cell of the same fluid nearby.

    Returns
    -------
    extension: Dict[Tuple[int, int], int]
        (receiver, fluid) -> donor.
    unextended: List[Tuple[int, int]]
        Pairs whose aggregated alpha stays below alpha_min.
    """
    if weights is None:
        weights = dict(DEFAULT_EXTENSION_WEIGHTS)
        if topology.is_two_fluid:
            weights['penalty'] = TWO_FLUID_PENALTY
    mesh = topology.mesh
    h = float(np.max(mesh.h))
    count = defaultdict(int)
    extension, pending = {}, []

    def best_of(alpha_e: float, label: int, candidates: List[Tuple[int, float]]) -> Optional[int]:
        best, best_score = None, -np.inf
        for d, distance in candidates:
            score = weights['area'] * (alpha_e + topology.alpha(d, label)) - weights['distance'] * distance / h \
                - weights['penalty'] * count[d]
            if score > best_score + 1e-14 or (abs(score - best_score) <= 1e-14 and d < best):
                best, best_score = d, score
        return best

    for e in topology.active_elements():
        for label in topology.labels(e):
            alpha_e = topology.alpha(e, label)
            if alpha_e >= alpha_min:
                continue
            faces = []
            for side, f, d in topology.face_neighbors(e):
                if d < 0 or d == e or not topology.is_active(d) or label not in topology.labels(d):
                    continue
                if topology.alpha(d, label) >= alpha_min and topology.beta(f, label) >= MIN_DONOR_BETA:
                    faces.append((d, mesh.h[0] if side in (1, 3) else mesh.h[1]))
            best = best_of(alpha_e, label, faces)
            if best is None:
                rings = [(d, float(np.linalg.norm(offset * mesh.h)))
                         for d, offset in topology.fluid_neighborhood(e, label, EXTENSION_RINGS)
                         if np.sum(np.abs(offset)) > 1 and topology.alpha(d, label) >= alpha_min]
                best = best_of(alpha_e, label, rings)
            if best is None:
                pending.append((e, label))
            else:
                extension[(e, label)] = best
                count[best] += 1

    # largest cells first, so that a cell chosen as host is never extended itself
    aggregated = {}
    for e, label in sorted(pending, key=lambda p: (-topology.alpha(*p), p[0])):
        if (e, label) in aggregated:
            continue
        alpha_e = topology.alpha(e, label)
        hosts = [d for d, _ in topology.fluid_neighborhood(e, label, EXTENSION_RINGS)
                 if (d, label) in aggregated]
        if hosts:
            host = max(hosts, key=lambda d: (topology.alpha(d, label), -d))
            extension[(e, label)] = host
            aggregated[(host, label)] += alpha_e
        else:
            aggregated[(e, label)] = alpha_e
    unextended = []
    for (e, label), alpha in sorted(aggregated.items()):
        if alpha < alpha_min:
            warnings.warn(f'No donor for badly cut element {e} (fluid {label}, alpha={alpha:.3g}); '
                          f'it is kept unextended')
            unextended.append((e, label))
    return extension, unextended


def _classify_cell(cell: CutCell) -> str:
    labels = cell.labels
    if not labels:
        return 'inactive'
    if len(labels) == 2:
        return 'interface'
    if cell.cut:
        return 'immersed_boundary'
    return 'standard'


def classify(curves: Sequence[NurbsCurve], mesh: CartesianMesh, pairing: Optional[PeriodicPairing] = None,
             n_samples: int = DEFAULT_N_SAMPLES, alpha_min: float = DEFAULT_ALPHA_MIN, extension: bool = True,
             extension_weights: Optional[Dict[str, float]] = None, verbosity: int = 0) -> CutTopology:
    """Run the full classification and return the cut topology.

    Parameters
    ----------
    curves: Sequence[NurbsCurve]
        Boundary and interface curves.
    mesh: CartesianMesh
    pairing: PeriodicPairing, optional
    n_samples: int
        Minimum number of samples per curve.
    alpha_min: float
        Cells with a fluid area ratio below alpha_min are extended.
    extension: bool
        If False, badly cut cells are left as they are.
    extension_weights: Dict[str, float], optional
        Keys 'area', 'distance', 'penalty'.
    verbosity: int
    """
    if not 0 < alpha_min < 1:
        raise ValueError(f'alpha_min must lie in (0, 1), got {alpha_min}')
    pairing = pairing or PeriodicPairing()
    chains = chain_curves(curves)

    intersections, pieces_by_element = [], defaultdict(list)
    for index, chain in enumerate(chains):
        crossings = _chain_crossings(chain, index, mesh, pairing, n_samples)
        intersections += crossings
        for piece in _chain_pieces(chain, index, crossings, mesh):
            pieces_by_element[piece.element].append(piece)

    crossings_by_element = defaultdict(list)
    for c in intersections:
        for e in c.elements:
            if e >= 0:
                crossings_by_element[e].append(c)

    cells = {}
    for e, pieces in sorted(pieces_by_element.items()):
        regions, lines = split_regions(mesh, e, pieces, pairing)
        segments = [seg for p in pieces for seg in p.segments()]
        cells[e] = CutCell(e, regions, segments, crossings_by_element[e], lines, cut=True)

    portions_by_side = {}
    for e, cell in cells.items():
        for region in cell.regions:
            if region.label is None:
                raise TopologyError(f'Region of cut element {e} could not be labelled')
            for f, t0, t1, label in _face_portions(mesh, region):
                portions_by_side.setdefault((f, e), []).append((t0, t1, label))

    face_labels = {}
    for e, cell in cells.items():
        for side in range(4):
            nb = neighbor(mesh, e, side, pairing)
            if nb < 0 or nb in cells or not mesh.is_active(nb):
                continue
            portions = portions_by_side.get((mesh.element_faces(e)[side], e), [])
            if portions:
                # the uncut side sees one label along the whole face
                label = max(portions, key=lambda p: p[1] - p[0])[2]
                opposite = (side + 2) % 4
                previous = face_labels.setdefault((nb, opposite), label)
                if previous != label:
                    raise TopologyError(f'Element {nb} inherits conflicting labels {previous} and {label}')
    uncut_labels = propagate_fluid(mesh, cells, face_labels, pairing)

    all_cells = []
    for e in range(mesh.n_elements):
        if e in cells:
            cell = cells[e]
        elif e in uncut_labels:
            regions, _ = split_regions(mesh, e, [], pairing)
            regions[0].label = uncut_labels[e]
            cell = CutCell(e, regions)
            for f, t0, t1, label in _face_portions(mesh, regions[0]):
                portions_by_side.setdefault((f, e), []).append((t0, t1, label))
        else:
            cell = CutCell(e, [])
        cell.classification = _classify_cell(cell) if mesh.is_active(e) else 'inactive'
        all_cells.append(cell)

    face_portions = {}
    # one side of a face describes it, also when periodic pairing joins an element to itself
    for (face, e), portions in sorted(portions_by_side.items()):
        f = pairing.principal(face)
        if f not in face_portions and all_cells[e].classification != 'inactive':
            face_portions[f] = _merge_portions(portions)

    topology = CutTopology(mesh, pairing, list(curves), chains, all_cells, face_portions, intersections,
                           alpha_min)
    if extension_weights is not None:
        topology.extension_weights = dict(extension_weights)
    elif topology.is_two_fluid:
        topology.extension_weights['penalty'] = TWO_FLUID_PENALTY
    if extension:
        topology.extension, topology.unextended = select_extensions(topology, alpha_min,
                                                                    topology.extension_weights)
    else:
        topology.unextended = [(e, label) for e in topology.active_elements() for label in topology.labels(e)
                               if topology.alpha(e, label) < alpha_min]

    if verbosity > 0:
        counts = {kind: sum(c.classification == kind for c in all_cells) for kind in CLASSIFICATIONS}
        print(f'Classified {mesh.nx}x{mesh.ny} mesh: {counts}, {len(intersections)} crossings, '
              f'{len(topology.extension)} extensions')
    return topology
