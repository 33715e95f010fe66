# -*- coding: utf-8 -*-
"""Background Cartesian grid with faces, skeleton and periodic pairings.

Numbering
---------
Element (i, j), 0 <= i < nx, 0 <= j < ny, has id i + nx * j. Vertical faces
x = const come first, face (i, j) with 0 <= i <= nx having id j * (nx + 1) + i,
followed by the horizontal faces y = const, face (i, j) with 0 <= j <= ny
having id ny * (nx + 1) + j * nx + i.

The owner of a face is its lower-index element and the face normal points from
the owner to the neighbor (outward of the owner on the domain boundary).
"""
from typing import Dict, Tuple, Sequence, Optional

import numpy as np
from numpy import ndarray

from .utils import ConfigError, GeometryError

SIDES = ('bottom', 'right', 'top', 'left')
OUTWARD_NORMALS = np.array([[0., -1.], [1., 0.], [0., 1.], [-1., 0.]])


class PeriodicPairing:
    """Aliasing of boundary faces onto their periodic partners.

    Attributes
    ----------
    axes: Tuple[int]
        Periodic axes, 0 for x (left <-> right) and 1 for y (bottom <-> top).
    secondary_to_principal: Dict[int, int]
        Right (top) boundary face id -> left (bottom) boundary face id.
    """

    def __init__(self, axes: Sequence[int] = (), secondary_to_principal: Optional[Dict[int, int]] = None):
        self.axes = tuple(sorted(set(axes)))
        self.secondary_to_principal = dict(secondary_to_principal or {})
        self.principal_to_secondary = {v: k for k, v in self.secondary_to_principal.items()}

    def __len__(self):
        return len(self.secondary_to_principal)

    def merge(self, other: 'PeriodicPairing') -> 'PeriodicPairing':
        return PeriodicPairing(self.axes + other.axes,
                               {**self.secondary_to_principal, **other.secondary_to_principal})

    def principal(self, face: int) -> int:
        return self.secondary_to_principal.get(face, face)


class CartesianMesh:
    """Uniform axis-aligned grid of rectangles.

    Attributes
    ----------
    origin: 2 np.ndarray[float]
    extent: 2 np.ndarray[float]
        Side lengths (Lx, Ly).
    nx, ny: int
    h: 2 np.ndarray[float]
        Element sizes (hx, hy).
    n_elements, n_faces: int
    face_owner: np.ndarray[int]
    face_neighbor: np.ndarray[int]
        -1 on the boundary of the grid.
    face_axis: np.ndarray[int]
        0 for faces x = const, 1 for faces y = const.
    face_start, face_end: n_faces x 2 np.ndarray[float]
        End points, ordered from the low to the high tangential coordinate.
    active_box: Tuple[int, int, int, int]
        Element index range [i0, i1) x [j0, j1) of the active part of the grid.
    """

    def __init__(self, origin, extent, nx: int, ny: int, active_box: Optional[Tuple[int, int, int, int]] = None):
        if nx < 1 or ny < 1:
            raise ConfigError(f'Mesh needs at least one element per direction, got {nx}x{ny}')
        self.origin = np.asarray(origin, dtype=float)
        self.extent = np.asarray(extent, dtype=float)
        if np.any(self.extent <= 0):
            raise ConfigError(f'Mesh extent must be positive, got {self.extent}')
        self.nx = int(nx)
        self.ny = int(ny)
        self.h = self.extent / np.array([nx, ny])
        self.n_elements = nx * ny
        self.n_vertical = ny * (nx + 1)
        self.n_faces = self.n_vertical + nx * (ny + 1)
        self.active_box = (0, 0, nx, ny) if active_box is None else tuple(int(a) for a in active_box)
        i0, j0, i1, j1 = self.active_box
        if not (0 <= i0 < i1 <= nx and 0 <= j0 < j1 <= ny):
            raise ConfigError(f'Active box {self.active_box} does not fit a {nx}x{ny} mesh')
        self._build_faces()

    def _build_faces(self):
        nx, ny = self.nx, self.ny
        owner = np.full(self.n_faces, -1)
        neighbor = np.full(self.n_faces, -1)
        axis = np.zeros(self.n_faces, dtype=int)
        start = np.zeros((self.n_faces, 2))
        end = np.zeros((self.n_faces, 2))
        for j in range(ny):
            for i in range(nx + 1):
                f = self.vertical_face(i, j)
                left = self.element_id(i - 1, j) if i > 0 else -1
                right = self.element_id(i, j) if i < nx else -1
                owner[f], neighbor[f] = (left, right) if left >= 0 else (right, -1)
                start[f] = self.origin + self.h * (i, j)
                end[f] = self.origin + self.h * (i, j + 1)
        for j in range(ny + 1):
            for i in range(nx):
                f = self.horizontal_face(i, j)
                below = self.element_id(i, j - 1) if j > 0 else -1
                above = self.element_id(i, j) if j < ny else -1
                owner[f], neighbor[f] = (below, above) if below >= 0 else (above, -1)
                axis[f] = 1
                start[f] = self.origin + self.h * (i, j)
                end[f] = self.origin + self.h * (i + 1, j)
        self.face_owner = owner
        self.face_neighbor = neighbor
        self.face_axis = axis
        self.face_start = start
        self.face_end = end
        for a in (owner, neighbor, axis, start, end):
            a.setflags(write=False)

    def element_id(self, i: int, j: int) -> int:
        return i + self.nx * j

    def element_indices(self, e: int) -> Tuple[int, int]:
        return e % self.nx, e // self.nx

    def vertical_face(self, i: int, j: int) -> int:
        return j * (self.nx + 1) + i

    def horizontal_face(self, i: int, j: int) -> int:
        return self.n_vertical + j * self.nx + i

    @property
    def boundary_faces(self) -> ndarray:
        return np.nonzero(self.face_neighbor < 0)[0]

    @property
    def internal_faces(self) -> ndarray:
        return np.nonzero(self.face_neighbor >= 0)[0]

    def element_faces(self, e: int) -> Tuple[int, int, int, int]:
        """Face ids of the bottom, right, top and left sides of element e."""
        i, j = self.element_indices(e)
        return (self.horizontal_face(i, j), self.vertical_face(i + 1, j),
                self.horizontal_face(i, j + 1), self.vertical_face(i, j))

    def element_bounds(self, e: int) -> Tuple[float, float, float, float]:
        """(x0, y0, x1, y1) of element e."""
        i, j = self.element_indices(e)
        x0, y0 = self.origin + self.h * (i, j)
        x1, y1 = self.origin + self.h * (i + 1, j + 1)
        return x0, y0, x1, y1

    def element_center(self, e: int) -> ndarray:
        i, j = self.element_indices(e)
        return self.origin + self.h * (i + 0.5, j + 0.5)

    def element_corners(self, e: int) -> ndarray:
        """Counterclockwise corners starting at the lower left one, 4 x 2."""
        x0, y0, x1, y1 = self.element_bounds(e)
        return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])

    @property
    def element_area(self) -> float:
        return float(self.h[0] * self.h[1])

    @property
    def element_size(self) -> float:
        """h_e = max(hx, hy)."""
        return float(np.max(self.h))

    def to_reference(self, e: int, points: ndarray) -> ndarray:
        """Map physical points to the reference square [-1, 1]^2 of element e."""
        x0, y0, _, _ = self.element_bounds(e)
        return 2. * (np.asarray(points) - (x0, y0)) / self.h - 1.

    def is_active(self, e: int) -> bool:
        i, j = self.element_indices(e)
        i0, j0, i1, j1 = self.active_box
        return i0 <= i < i1 and j0 <= j < j1

    @property
    def active_bounds(self) -> Tuple[float, float, float, float]:
        i0, j0, i1, j1 = self.active_box
        x0, y0 = self.origin + self.h * (i0, j0)
        x1, y1 = self.origin + self.h * (i1, j1)
        return x0, y0, x1, y1

    def face_coordinate(self, f: int, points: ndarray) -> ndarray:
        """Reference coordinate in [-1, 1] of points on face f, increasing with the tangential coordinate."""
        points = np.atleast_2d(points)
        axis = 1 - self.face_axis[f]
        length = self.h[axis]
        return 2. * (points[:, axis] - self.face_start[f, axis]) / length - 1.

    def face_point(self, f: int, t: ndarray) -> ndarray:
        """Physical points of face coordinates t."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return self.face_start[f] + 0.5 * (t[:, None] + 1.) * (self.face_end[f] - self.face_start[f])

    def face_length(self, f: int) -> float:
        return float(self.h[1 - self.face_axis[f]])


def build_mesh(origin, extent, nx: int, ny: int, active_box=None) -> CartesianMesh:
    """Build the background grid covering origin + [0, Lx] x [0, Ly].

    >>> mesh = build_mesh((0., 0.), (1., 1.), 4, 4)
    >>> mesh.n_elements, mesh.n_faces, len(mesh.internal_faces)
    (16, 40, 24)
    """
    return CartesianMesh(origin, extent, nx, ny, active_box)


def pair_periodic(mesh: CartesianMesh, axis: int) -> PeriodicPairing:
    """Pair the right (axis 0) or top (axis 1) boundary faces with the opposite ones."""
    if axis not in (0, 1):
        raise ValueError(f'Unknown value for periodic axis, {axis}')
    if mesh.active_box != (0, 0, mesh.nx, mesh.ny):
        raise GeometryError('Periodic pairing requires the whole grid to be active')
    pairs = {}
    if axis == 0:
        for j in range(mesh.ny):
            pairs[mesh.vertical_face(mesh.nx, j)] = mesh.vertical_face(0, j)
    else:
        for i in range(mesh.nx):
            pairs[mesh.horizontal_face(i, mesh.ny)] = mesh.horizontal_face(i, 0)
    tangential = 1 - axis
    for secondary, principal in pairs.items():
        if abs(mesh.face_start[secondary, tangential] - mesh.face_start[principal, tangential]) > 1e-12 or \
                abs(mesh.face_end[secondary, tangential] - mesh.face_end[principal, tangential]) > 1e-12:
            raise GeometryError(f'Periodic faces {secondary} and {principal} have different tangential ranges')
    return PeriodicPairing((axis,), pairs)


def neighbor(mesh: CartesianMesh, e: int, side: int, pairing: Optional[PeriodicPairing] = None) -> int:
    """Element across the given side (index into SIDES) of element e, -1 if none."""
    i, j = mesh.element_indices(e)
    di, dj = [(0, -1), (1, 0), (0, 1), (-1, 0)][side]
    i, j = i + di, j + dj
    axes = pairing.axes if pairing is not None else ()
    if 0 in axes:
        i %= mesh.nx
    if 1 in axes:
        j %= mesh.ny
    if not (0 <= i < mesh.nx and 0 <= j < mesh.ny):
        return -1
    return mesh.element_id(i, j)


def element_index(mesh: CartesianMesh, point) -> int:
    """Element containing a point, points outside the grid being clamped onto it."""
    i, j = np.floor((np.asarray(point, dtype=float) - mesh.origin) / mesh.h).astype(int)
    return mesh.element_id(min(max(i, 0), mesh.nx - 1), min(max(j, 0), mesh.ny - 1))


def face_sides(mesh: CartesianMesh, f: int, pairing: Optional[PeriodicPairing] = None) -> Tuple[int, int]:
    """(owner, neighbor) of face f after periodic aliasing; f must be a principal face."""
    owner, other = int(mesh.face_owner[f]), int(mesh.face_neighbor[f])
    if pairing is not None and f in pairing.principal_to_secondary:
        other = int(mesh.face_owner[pairing.principal_to_secondary[f]])
        owner, other = min(owner, other), max(owner, other)
    return owner, other
