"""Near-lattice packing of one rectangle of bounded eccentricity.

A block of ``M1*M2`` consecutive squares is laid out row by row.  Each row
is pushed flush against the right edge of the target and each column is
stacked from the bottom, so consecutive squares touch along full edges.
The left-over space splits into four explicit families of gap rectangles:
thin ``surround`` gaps between four neighbouring squares, ``left`` gaps in
front of each row, ``top`` gaps above each column and one ``corner``.

Positions are accumulated edge to edge in floating point.  The coordinate
where one square ends is the coordinate where its neighbour begins, bit
for bit, which keeps the disjointness checks exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .geometry import PlacedSquare, Rect, make_rect, unweighted_perim
from .series import Params, side_length

# Relative tolerance for deciding that w/s or h/s sits on an integer.
CLAMP_TOL = 1e-9
# Extents below this multiple of the reference side are dropped as degenerate.
DEGENERATE_REL = 1e-15


class PreconditionViolation(ValueError):
    """A block target fails ``M s <= w <= h <= 3 M s`` (or a BlockSpec bracket)."""

    def __init__(self, inequality: str, lhs: float, rhs: float, n0: int, rect: Rect | None = None):
        self.inequality = inequality
        self.lhs = lhs
        self.rhs = rhs
        self.margin = rhs - lhs
        self.n0 = n0
        self.rect = rect
        super().__init__(f"{inequality} violated at n0={n0}: lhs={lhs!r} rhs={rhs!r} (margin {self.margin:.3e})")

    def as_dict(self) -> dict:
        return {
            "kind": "PreconditionViolation",
            "inequality": self.inequality,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "n": self.n0,
        }


class ContainmentFailure(RuntimeError):
    def __init__(self, i: int, j: int, margin: float, edge: str):
        self.i, self.j, self.margin, self.edge = i, j, margin, edge
        super().__init__(f"square ({i},{j}) leaves the target across its {edge} edge by {-margin:.3e}")


@dataclass(frozen=True)
class BlockSpec:
    """Target rectangle (portrait, ``dx <= dy``) with its grid dimensions."""

    rect: Rect
    n0: int
    params: Params
    M1: int
    M2: int

    def __post_init__(self) -> None:
        if self.M1 < 1 or self.M2 < 1:
            raise ValueError("grid dimensions must be positive")
        if not self.rect.is_portrait:
            raise ValueError("BlockSpec expects a portrait rectangle (dx <= dy)")
        s = side_length(self.n0, self.params.t)
        w, h = self.rect.dx, self.rect.dy
        slack = CLAMP_TOL * max(self.M1, self.M2)
        if w / s < self.M1 - slack:
            raise PreconditionViolation("M1*s <= w", self.M1 * s, w, self.n0, self.rect)
        if h / s < self.M2 - slack:
            raise PreconditionViolation("M2*s <= h", self.M2 * s, h, self.n0, self.rect)

    @property
    def side0(self) -> float:
        return side_length(self.n0, self.params.t)


@dataclass
class BlockResult:
    squares: list[PlacedSquare]
    gaps: list[Rect]
    n0_next: int
    M1: int
    M2: int
    rect: Rect
    discarded_area: float = 0.0
    gap_counts: dict[str, int] = field(default_factory=dict)

    @property
    def gap_perimeter(self) -> float:
        return unweighted_perim(self.gaps)

    @property
    def square_perimeter(self) -> float:
        return math.fsum(4.0 * sq.side for sq in self.squares)


def _clamped_floor(q: float) -> int:
    r = round(q)
    if abs(q - r) <= CLAMP_TOL * max(1.0, abs(q)):
        return int(r)
    return math.floor(q)


def choose_M1_M2(rect: Rect, n0: int, params: Params) -> tuple[int, int]:
    """Grid dimensions for ``rect`` with first index ``n0``.

    ``M1 = floor(w/s)`` and ``M2 = floor(h/s)`` with ``s = n0**-t``; quotients
    within ``CLAMP_TOL`` of an integer snap to it.
    """
    s = side_length(n0, params.t)
    w, h = rect.width, rect.height
    M = params.M
    if w / s < M * (1.0 - CLAMP_TOL):
        raise PreconditionViolation("M*s <= w(R)", M * s, w, n0, rect)
    if h / s > 3 * M * (1.0 + CLAMP_TOL):
        raise PreconditionViolation("h(R) <= 3*M*s", h, 3 * M * s, n0, rect)
    M1 = max(_clamped_floor(w / s), M)
    M2 = min(max(_clamped_floor(h / s), M1), 3 * M)
    return M1, M2


def lex_index(i: int, j: int, n0: int, M1: int, M2: int | None = None) -> int:
    if not 0 <= i < M1 or j < 0 or (M2 is not None and j >= M2):
        raise IndexError(f"grid position ({i},{j}) outside {M1}x{M2}")
    return n0 + j * M1 + i


def place_squares(spec: BlockSpec, side_fn: Callable[[int], float] | None = None) -> list[PlacedSquare]:
    """Place the ``M1*M2`` squares of ``spec`` in index order.

    ``side_fn`` replaces ``n**-t`` (used by tests to build the exact lattice).
    """
    t = spec.params.t
    side = side_fn or (lambda n: side_length(n, t))
    r, M1, M2 = spec.rect, spec.M1, spec.M2
    # relative slack on the square scale plus the rounding of M accumulated additions
    slack_x = 1e-12 * spec.side0 + (M1 + 2) * math.ulp(max(abs(r.x_lo), abs(r.x_hi)))
    slack_y = 1e-12 * spec.side0 + (M2 + 2) * math.ulp(max(abs(r.y_lo), abs(r.y_hi)))

    sides = [[side(lex_index(i, j, spec.n0, M1)) for i in range(M1)] for j in range(M2)]
    tops = [r.y_lo] * M1
    squares: list[PlacedSquare] = []
    for j in range(M2):
        row = sides[j]
        x = r.x_hi - math.fsum(row)
        if x < r.x_lo - slack_x:
            raise ContainmentFailure(0, j, x - r.x_lo, "left")
        for i in range(M1):
            s = row[i]
            squares.append(PlacedSquare(lex_index(i, j, spec.n0, M1), s, x, tops[i]))
            tops[i] = tops[i] + s
            x = x + s
        if x > r.x_hi + slack_x:
            raise ContainmentFailure(M1 - 1, j, r.x_hi - x, "right")
    for i, top in enumerate(tops):
        if top > r.y_hi + slack_y:
            raise ContainmentFailure(i, M2 - 1, r.y_hi - top, "top")
    return squares


def enumerate_gaps(spec: BlockSpec, squares: list[PlacedSquare]) -> tuple[list[Rect], float]:
    """Gap rectangles left by :func:`place_squares`, plus the dropped area.

    Gaps thinner than ``1e-15 * n0**-t`` in either direction are dropped and
    their (absolute) area returned as the second element.
    """
    r, M1, M2 = spec.rect, spec.M1, spec.M2
    if len(squares) != M1 * M2:
        raise ValueError("square list does not match the grid")
    min_extent = DEGENERATE_REL * spec.side0

    def sq(i: int, j: int) -> PlacedSquare:
        return squares[j * M1 + i]

    gaps: list[Rect] = []
    discarded = 0.0

    def emit(x0: float, y0: float, x1: float, y1: float, tag: str) -> None:
        nonlocal discarded
        g = make_rect(x0, y0, x1, y1, min_extent, tag)
        if g is None:
            discarded += abs((x1 - x0) * (y1 - y0))
        else:
            gaps.append(g)

    # bounded by S(i,j) on the left, S(i+1,j+1) on the right,
    # S(i+1,j) below and S(i,j+1) above
    for j in range(M2 - 1):
        for i in range(M1 - 1):
            emit(sq(i + 1, j).x_lo, sq(i + 1, j).y_hi, sq(i + 1, j + 1).x_lo, sq(i, j + 1).y_lo, "surround")
    for j in range(M2):
        s = sq(0, j)
        emit(r.x_lo, s.y_lo, s.x_lo, s.y_hi, "left")
    for i in range(M1):
        s = sq(i, M2 - 1)
        emit(s.x_lo, s.y_hi, s.x_hi, r.y_hi, "top")
    s = sq(0, M2 - 1)
    emit(r.x_lo, s.y_hi, s.x_lo, r.y_hi, "corner")
    return gaps, discarded


def pack_spec(spec: BlockSpec, side_fn: Callable[[int], float] | None = None) -> BlockResult:
    squares = place_squares(spec, side_fn)
    gaps, discarded = enumerate_gaps(spec, squares)
    counts = {tag: 0 for tag in ("surround", "left", "top", "corner")}
    for g in gaps:
        counts[g.tag] += 1
    return BlockResult(squares, gaps, spec.n0 + spec.M1 * spec.M2, spec.M1, spec.M2, spec.rect, discarded, counts)


def _swap_result(res: BlockResult, rect: Rect) -> BlockResult:
    return BlockResult(
        [s.swapped() for s in res.squares],
        [g.swapped() for g in res.gaps],
        res.n0_next,
        res.M1,
        res.M2,
        rect,
        res.discarded_area,
        res.gap_counts,
    )


def pack_block(rect: Rect, n0: int, params: Params) -> BlockResult:
    """Pack ``rect`` with squares ``n0 .. n0 + M1*M2 - 1`` plus gap rectangles.

    Landscape targets are reflected in y = x, packed, and reflected back.
    """
    M1, M2 = choose_M1_M2(rect, n0, params)
    if rect.is_portrait:
        return pack_spec(BlockSpec(rect, n0, params, M1, M2))
    res = pack_spec(BlockSpec(rect.swapped(), n0, params, M1, M2))
    return _swap_result(res, rect)
