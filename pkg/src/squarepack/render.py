"""SVG output.

The viewBox is the outer rectangle and the content sits in a group with
``transform="matrix(1 0 0 -1 0 y0+y1)"``, which flips the y axis so that
element attributes are the certificate coordinates verbatim.  Squares are
filled along a colour ramp by index; residual rectangles are outlined only.
"""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import quoteattr

from .certificate import PackingCertificate
from .series import side_length

_RAMP = ((68, 1, 84), (59, 82, 139), (33, 145, 140), (94, 201, 98), (253, 231, 37))


def _color(frac: float) -> str:
    frac = min(max(frac, 0.0), 1.0) * (len(_RAMP) - 1)
    k = min(int(frac), len(_RAMP) - 2)
    u = frac - k
    a, b = _RAMP[k], _RAMP[k + 1]
    return "#%02x%02x%02x" % tuple(round(a[c] + (b[c] - a[c]) * u) for c in range(3))


def _r(x: float) -> str:
    return repr(float(x))


def render_svg(cert: PackingCertificate, pixel_width: int = 800, label: bool = False) -> str:
    o = cert.outer
    w, h = o.dx, o.dy
    stroke = _r(min(w, h) * 1e-3)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{pixel_width}" '
        f'height="{round(pixel_width * h / w)}" viewBox="{_r(o.x_lo)} {_r(o.y_lo)} {_r(w)} {_r(h)}">',
        f'<g transform="matrix(1 0 0 -1 0 {_r(o.y_lo + o.y_hi)})" stroke-width="{stroke}">',
        f'<rect class="outer" x="{_r(o.x_lo)}" y="{_r(o.y_lo)}" width="{_r(w)}" height="{_r(h)}" fill="white" stroke="black"/>',
    ]
    ns = [s.n for s in cert.squares]
    lo, hi = (min(ns), max(ns)) if ns else (0, 1)
    span = max(hi - lo, 1)
    t = cert.params.t
    for s in cert.squares:
        side = side_length(s.n, t)
        lines.append(
            f'<rect class="square" data-n="{s.n}" x="{_r(s.x_lo)}" y="{_r(s.y_lo)}" width="{_r(side)}" '
            f'height="{_r(side)}" fill="{_color((s.n - lo) / span)}" stroke="black"/>'
        )
    for r in cert.residuals:
        lines.append(
            f'<rect class="residual" data-tag={quoteattr(r.tag)} x="{_r(r.x_lo)}" y="{_r(r.y_lo)}" '
            f'width="{_r(r.dx)}" height="{_r(r.dy)}" fill="none" stroke="red"/>'
        )
    lines.append("</g>")
    if label:
        lines.append(
            f'<text x="{_r(o.x_lo)}" y="{_r(o.y_lo + 0.04 * h)}" font-size="{_r(0.03 * h)}">'
            f"{len(cert.squares)} squares, {len(cert.residuals)} residual rectangles</text>"
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def write_svg(cert: PackingCertificate, path: str | Path, **kwargs) -> None:
    Path(path).write_text(render_svg(cert, **kwargs))
