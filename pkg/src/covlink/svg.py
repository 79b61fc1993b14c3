"""Drawing of one solution as a standalone SVG document."""
from __future__ import annotations

from xml.sax.saxutils import quoteattr

from .instance import GraphStructure, Instance

SIZE = 600.0
PAD = 20.0


def _fmt(v: float) -> str:
    return format(v, ".4f")


def render(inst: Instance, structure: GraphStructure, choice=None, coords=None) -> str:
    """Demand points as dots, coverage disks of served points, facilities as crosses, links.

    ``choice`` is a per-point facility (1-based) or None; ``coords`` are the
    facility positions. Without them only the demand points are drawn.
    """
    xs = [pt.x for pt in inst.points]
    ys = [pt.y for pt in inst.points]
    ext = [(pt.x - R, pt.y - R, pt.x + R, pt.y + R)
           for pt, R in zip(inst.points, inst.cover_radii)]
    if coords:
        xs += [c[0] for c in coords]
        ys += [c[1] for c in coords]
    x0 = min([e[0] for e in ext] + xs)
    y0 = min([e[1] for e in ext] + ys)
    x1 = max([e[2] for e in ext] + xs)
    y1 = max([e[3] for e in ext] + ys)
    span = max(x1 - x0, y1 - y0, 1e-9)
    s = (SIZE - 2 * PAD) / span

    def X(x):
        return _fmt(PAD + (x - x0) * s)

    def Y(y):
        # flip so that y grows upwards
        return _fmt(SIZE - PAD - (y - y0) * s)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(SIZE)}" height="{_fmt(SIZE)}" '
           f'viewBox="0 0 {_fmt(SIZE)} {_fmt(SIZE)}">',
           f'<rect width="{_fmt(SIZE)}" height="{_fmt(SIZE)}" fill="white"/>']
    if choice is not None:
        for i, j in enumerate(choice):
            if j is None:
                continue
            pt = inst.points[i]
            out.append(f'<circle class="coverage" cx="{X(pt.x)}" cy="{Y(pt.y)}" '
                       f'r="{_fmt(inst.cover_radii[i] * s)}" fill="steelblue" '
                       f'fill-opacity="0.15" stroke="steelblue" stroke-opacity="0.5"/>')
    if coords:
        for j, k in structure.edges:
            a, b = coords[j - 1], coords[k - 1]
            out.append(f'<line class="link" x1="{X(a[0])}" y1="{Y(a[1])}" x2="{X(b[0])}" '
                       f'y2="{Y(b[1])}" stroke="darkred" stroke-width="1.5"/>')
    for i, pt in enumerate(inst.points):
        served = choice is not None and choice[i] is not None
        out.append(f'<circle class="demand" cx="{X(pt.x)}" cy="{Y(pt.y)}" r="3" '
                   f'fill={quoteattr("black" if served else "gray")}/>')
    if coords:
        h = 6.0
        for j, c in enumerate(coords):
            cx, cy = PAD + (c[0] - x0) * s, SIZE - PAD - (c[1] - y0) * s
            d = (f"M {_fmt(cx - h)} {_fmt(cy - h)} L {_fmt(cx + h)} {_fmt(cy + h)} "
                 f"M {_fmt(cx - h)} {_fmt(cy + h)} L {_fmt(cx + h)} {_fmt(cy - h)}")
            out.append(f'<path class="facility" data-index="{j + 1}" d="{d}" stroke="red" '
                       f'stroke-width="2" fill="none"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
