# -*- coding: utf-8 -*-
"""Plain text geometry files.

One curve per line, whitespace separated::

    degree n_knots knot_1 ... knot_n n_points x_1 y_1 w_1 ... x_m y_m w_m orientation role [fluid]

Lines starting with '#' and empty lines are skipped. Floats are written with
repr so that a written file reads back to the identical curves.
"""
from typing import List, Sequence

from .nurbs_geometry import NurbsCurve
from .utils import GeometryError


def _parse_record(tokens: List[str], line_number: int) -> NurbsCurve:
    try:
        pos = 0
        degree = int(tokens[pos])
        pos += 1
        n_knots = int(tokens[pos])
        pos += 1
        knots = [float(t) for t in tokens[pos:pos + n_knots]]
        pos += n_knots
        n_points = int(tokens[pos])
        pos += 1
        values = [float(t) for t in tokens[pos:pos + 3 * n_points]]
        pos += 3 * n_points
        orientation = tokens[pos]
        role = tokens[pos + 1]
        pos += 2
        fluid = int(tokens[pos]) if pos < len(tokens) else 1
        if pos + 1 < len(tokens):
            raise GeometryError(f'Line {line_number}: trailing tokens {tokens[pos + 1:]}')
        if len(knots) != n_knots or len(values) != 3 * n_points:
            raise GeometryError(f'Line {line_number}: record is truncated')
    except (ValueError, IndexError) as e:
        if isinstance(e, GeometryError):
            raise
        raise GeometryError(f'Line {line_number}: malformed curve record ({e})') from e

    points = [values[3 * i:3 * i + 2] for i in range(n_points)]
    weights = values[2::3]
    try:
        return NurbsCurve(degree, knots, points, weights, orientation=orientation, role=role, fluid=fluid)
    except GeometryError as e:
        raise GeometryError(f'Line {line_number}: {e}') from e


def parse_geometry(text: str) -> List[NurbsCurve]:
    """Parse the curves of a geometry file given as a string.

    >>> curves = parse_geometry('1 4 0 0 1 1 2 0 0 1 1 0 1 counterclockwise interface')
    >>> curves[0].end.tolist()
    [1.0, 0.0]
    """
    curves = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith('#'):
            continue
        curves.append(_parse_record(stripped.split(), line_number))
    return curves


def read_geometry(path: str) -> List[NurbsCurve]:
    """Read all curves of a geometry file."""
    with open(path, 'r') as f:
        return parse_geometry(f.read())


def format_curve(curve: NurbsCurve) -> str:
    tokens = [str(curve.degree), str(len(curve.knots))]
    tokens += [repr(float(u)) for u in curve.knots]
    tokens.append(str(len(curve.control_points)))
    for (x, y), w in zip(curve.control_points, curve.weights):
        tokens += [repr(float(x)), repr(float(y)), repr(float(w))]
    tokens += [curve.orientation, curve.role, str(curve.fluid)]
    return ' '.join(tokens)


def write_geometry(curves: Sequence[NurbsCurve], path: str, header: str = None) -> None:
    """Write the curves to a geometry file, one record per line."""
    with open(path, 'w') as f:
        if header:
            for line in header.splitlines():
                f.write(f'# {line}\n')
        for curve in curves:
            f.write(format_curve(curve) + '\n')
