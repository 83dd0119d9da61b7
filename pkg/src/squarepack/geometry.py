"""Axis-aligned rectangles, placed squares and the residual family.

All coordinates live in the frame of the outer square, origin at its
lower-left corner.  Width is the shorter side and height the longer one,
regardless of orientation.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

from .series import CompensatedSum

GAP_TAGS = ("surround", "left", "top", "corner")


@dataclass(frozen=True)
class Rect:
    x_lo: float
    y_lo: float
    x_hi: float
    y_hi: float
    tag: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if not (self.x_lo < self.x_hi and self.y_lo < self.y_hi):
            raise ValueError(f"degenerate or inverted rectangle: {self!r}")

    @property
    def dx(self) -> float:
        return self.x_hi - self.x_lo

    @property
    def dy(self) -> float:
        return self.y_hi - self.y_lo

    @property
    def width(self) -> float:
        return min(self.dx, self.dy)

    @property
    def height(self) -> float:
        return max(self.dx, self.dy)

    @property
    def area(self) -> float:
        return self.dx * self.dy

    @property
    def is_portrait(self) -> bool:
        """True when the width runs along x."""
        return self.dx <= self.dy

    def with_tag(self, tag: str) -> Rect:
        return Rect(self.x_lo, self.y_lo, self.x_hi, self.y_hi, tag)

    def swapped(self) -> Rect:
        return Rect(self.y_lo, self.x_lo, self.y_hi, self.x_hi, self.tag)


def make_rect(x_lo: float, y_lo: float, x_hi: float, y_hi: float, min_extent: float = 0.0, tag: str = "") -> Rect | None:
    """Build a rectangle, or return None if either extent is below ``min_extent``."""
    if x_hi - x_lo <= min_extent or y_hi - y_lo <= min_extent:
        return None
    return Rect(x_lo, y_lo, x_hi, y_hi, tag)


@dataclass(frozen=True)
class PlacedSquare:
    n: int
    side: float
    x_lo: float
    y_lo: float

    @property
    def x_hi(self) -> float:
        return self.x_lo + self.side

    @property
    def y_hi(self) -> float:
        return self.y_lo + self.side

    @property
    def area(self) -> float:
        return self.side * self.side

    def swapped(self) -> PlacedSquare:
        return PlacedSquare(self.n, self.side, self.y_lo, self.x_lo)


def width(r: Rect) -> float:
    return r.width


def height(r: Rect) -> float:
    return r.height


def weighted_perim_term(r: Rect, delta: float) -> float:
    """``w**delta * h``, the contribution of ``r`` to the weighted perimeter."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return r.width**delta * r.height


def unweighted_perim(rs: Iterable[Rect]) -> float:
    return math.fsum(2.0 * (r.width + r.height) for r in rs)


Point = tuple[float, float]


def _swap_point(p: Point) -> Point:
    return (p[1], p[0])


def transpose_frame(r: Rect) -> tuple[Rect, Callable[[Point], Point]]:
    """Reflect ``r`` in the line y = x.

    The returned map sends points of one frame to the other and is its own
    inverse.  A pure coordinate swap involves no arithmetic, so round trips
    are exact.
    """
    return r.swapped(), _swap_point


class Family:
    """Residual rectangles with cached area and weighted perimeter.

    Removal is by handle (the integer returned from :meth:`add`).  The
    widest rectangle is served from a lazy heap with ties broken by the
    smallest ``(y_lo, x_lo)``.
    """

    def __init__(self, delta: float, rects: Iterable[Rect] = ()) -> None:
        self.delta = delta
        self._rects: dict[int, Rect] = {}
        self._heap: list[tuple[float, float, float, int]] = []
        self._ids = itertools.count()
        self._area = CompensatedSum()
        self._wperim = CompensatedSum()
        for r in rects:
            self.add(r)

    def add(self, r: Rect) -> int:
        key = next(self._ids)
        self._rects[key] = r
        self._area += r.area
        self._wperim += weighted_perim_term(r, self.delta)
        heapq.heappush(self._heap, (-r.width, r.y_lo, r.x_lo, key))
        return key

    def remove(self, key: int) -> Rect:
        r = self._rects.pop(key)
        self._area -= r.area
        self._wperim -= weighted_perim_term(r, self.delta)
        return r

    def widest(self) -> tuple[int, Rect]:
        while self._heap:
            _, _, _, key = self._heap[0]
            if key in self._rects:
                return key, self._rects[key]
            heapq.heappop(self._heap)
        raise LookupError("family is empty")

    def __len__(self) -> int:
        return len(self._rects)

    def __iter__(self) -> Iterator[Rect]:
        return iter(self._rects.values())

    def items(self):
        return self._rects.items()

    @property
    def cached_area(self) -> float:
        return self._area.value

    @property
    def cached_wperim(self) -> float:
        return self._wperim.value

    def recompute_area(self) -> float:
        return math.fsum(r.area for r in self._rects.values())

    def recompute_wperim(self) -> float:
        return math.fsum(weighted_perim_term(r, self.delta) for r in self._rects.values())

    def max_height(self) -> float:
        return max((r.height for r in self._rects.values()), default=0.0)

    def max_width(self) -> float:
        return max((r.width for r in self._rects.values()), default=0.0)
