"""Independent checks on a packing certificate.

Nothing here trusts the producer: square sides are recomputed from
``(n, t)``, overlaps are found by a plane sweep, coverage is checked by
matching item edges along every grid line, and the area and perimeter
identities are recomputed from the raw coordinates.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .certificate import PackingCertificate
from .geometry import PlacedSquare, Rect, weighted_perim_term
from .series import partial_sum, perimeter_budget, side_length, tail_sum

Box = tuple[float, float, float, float]

SLACK_REL = 1e-12
SIDE_RTOL = 1e-14
TILING_RTOL = 1e-10
TAIL_RTOL = 1e-8
DISCARD_RTOL = 1e-12


def footprint(item: Rect | PlacedSquare) -> Box:
    return (item.x_lo, item.y_lo, item.x_hi, item.y_hi)


@dataclass
class DisjointResult:
    ok: bool
    violations: list[tuple[int, int, float]]

    @property
    def first(self) -> tuple[int, int, float] | None:
        return self.violations[0] if self.violations else None


_PAIR_CHUNK = 1 << 22


def _candidate_pairs(lo: np.ndarray, hi: np.ndarray, eps: float):
    """Pairs ``(a, b)`` with ``lo[b]`` in ``[lo[a], hi[a] - eps)``, ``b`` after ``a`` in sorted order.

    Two boxes whose spans overlap by more than ``eps`` always form such a
    pair in one order or the other, so this is a complete candidate list.
    Yields chunks to bound memory.
    """
    order = np.argsort(lo, kind="stable")
    slo = lo[order]
    start = np.arange(1, len(lo))
    stop = np.searchsorted(slo, hi[order] - eps, side="left")[:-1]
    count = np.maximum(stop - start, 0)
    if not count.any():
        return
    cum = np.cumsum(count)
    first = 0
    while first < len(count):
        base = cum[first - 1] if first else 0
        last = int(np.searchsorted(cum, base + _PAIR_CHUNK, side="right"))
        last = max(last, first + 1)
        c = count[first:last]
        owner = np.repeat(np.arange(first, last), c)
        offs = np.arange(int(c.sum())) - np.repeat(np.cumsum(c) - c, c)
        yield order[owner], order[start[owner] + offs]
        first = last


def check_disjoint(boxes: Sequence[Box], eps: float = 0.0) -> DisjointResult:
    """All pairs whose interiors overlap by more than ``eps`` in both axes.

    Sweep over the axis with fewer span collisions: boxes sorted by their
    low edge, each one tested against the boxes whose low edge falls
    inside its span.  Pairs are ``(i, j, overlap_area)`` with ``i < j``, sorted.
    """
    if len(boxes) < 2:
        return DisjointResult(True, [])
    a = np.asarray(boxes, dtype=np.float64)

    def collisions(lo, hi):
        slo = np.sort(lo)
        stop = np.searchsorted(slo, hi - eps, side="left")
        return int(np.maximum(stop - np.searchsorted(slo, lo, side="right"), 0).sum())

    axis = 0 if collisions(a[:, 0], a[:, 2]) <= collisions(a[:, 1], a[:, 3]) else 1
    found: set[tuple[int, int, float]] = set()
    for p, q in _candidate_pairs(a[:, axis], a[:, axis + 2], eps):
        ox = np.minimum(a[p, 2], a[q, 2]) - np.maximum(a[p, 0], a[q, 0])
        oy = np.minimum(a[p, 3], a[q, 3]) - np.maximum(a[p, 1], a[q, 1])
        hit = np.nonzero((ox > eps) & (oy > eps))[0]
        for k in hit:
            i, j = sorted((int(p[k]), int(q[k])))
            found.add((i, j, float(ox[k] * oy[k])))
    out = sorted(found)
    return DisjointResult(not out, out)


def check_disjoint_bruteforce(boxes: Sequence[Box], eps: float = 0.0) -> DisjointResult:
    """O(N^2) reference for :func:`check_disjoint`."""
    if not boxes:
        return DisjointResult(True, [])
    a = np.asarray(boxes, dtype=np.float64)
    found = []
    for i in range(len(a) - 1):
        rest = a[i + 1 :]
        ox = np.minimum(a[i, 2], rest[:, 2]) - np.maximum(a[i, 0], rest[:, 0])
        oy = np.minimum(a[i, 3], rest[:, 3]) - np.maximum(a[i, 1], rest[:, 1])
        for j in np.nonzero((ox > eps) & (oy > eps))[0]:
            found.append((i, i + 1 + int(j), float(ox[j] * oy[j])))
    return DisjointResult(not found, found)


@dataclass
class ContainmentResult:
    ok: bool
    worst_margin: float
    worst_index: int | None


def check_containment(boxes: Sequence[Box], outer: Box, eps: float = 0.0) -> ContainmentResult:
    """Smallest signed distance from any box edge to the outer boundary."""
    if not boxes:
        return ContainmentResult(True, math.inf, None)
    a = np.asarray(boxes, dtype=np.float64)
    margins = np.minimum.reduce([a[:, 0] - outer[0], a[:, 1] - outer[1], outer[2] - a[:, 2], outer[3] - a[:, 3]])
    k = int(np.argmin(margins))
    worst = float(margins[k])
    return ContainmentResult(worst >= -eps, worst, k)


@dataclass
class CoverResult:
    ok: bool
    witness: dict | None = None


def _balanced_lines(coord, side, lo, hi, eps: float, axis: str) -> dict | None:
    """Edges on each grid line must pair up: low edges against high edges.

    ``side`` is +1 for a low edge and -1 for a high edge.  Edges whose
    coordinates chain within ``eps`` form one line; along it the running
    balance of low minus high coverage must vanish except on slivers no
    longer than ``eps``.
    """
    order = np.argsort(coord, kind="stable")
    c = coord[order]
    line = np.concatenate(([0], np.cumsum(np.diff(c) > eps)))
    pos = np.concatenate((lo[order], hi[order]))
    weight = np.concatenate((side[order], -side[order]))
    group = np.concatenate((line, line))
    ev = np.lexsort((weight, pos, group))
    pos, weight, group = pos[ev], weight[ev], group[ev]
    balance = np.cumsum(weight)
    length = np.diff(pos)
    bad = np.nonzero((balance[:-1] != 0) & (group[1:] == group[:-1]) & (length > eps))[0]
    if len(bad) == 0:
        return None
    k = int(bad[0])
    at = float(c[np.searchsorted(line, group[k])])
    return {"axis": axis, "line": at, "from": float(pos[k]), "to": float(pos[k + 1]), "balance": int(balance[k])}


def check_cover(boxes: Sequence[Box], outer: Box, eps: float = 0.0) -> CoverResult:
    """Every edge of every box is matched by a neighbour or the outer boundary.

    Together with disjointness and containment this certifies that the
    boxes tile ``outer`` with no hole wider than ``eps``.
    """
    ox0, oy0, ox1, oy1 = outer
    # the outer boundary acts as the opposite side of the border edges
    frame = np.array([(ox1, oy1, ox0, oy0)], dtype=np.float64)
    a = np.asarray(list(boxes), dtype=np.float64).reshape(-1, 4)
    a = np.concatenate((a, frame))
    ones = np.ones(len(a))
    for axis, (c0, c1, l0, l1) in (("x", (0, 2, 1, 3)), ("y", (1, 3, 0, 2))):
        lo = np.minimum(a[:, l0], a[:, l1])
        hi = np.maximum(a[:, l0], a[:, l1])
        coord = np.concatenate((a[:, c0], a[:, c1]))
        side = np.concatenate((ones, -ones))
        witness = _balanced_lines(coord, side, np.concatenate((lo, lo)), np.concatenate((hi, hi)), eps, axis)
        if witness is not None:
            return CoverResult(False, witness)
    return CoverResult(True, None)


@dataclass
class VerificationReport:
    disjointness_ok: bool
    first_overlap: tuple[int, int, float] | None
    overlap_count: int
    containment_ok: bool
    worst_margin: float
    worst_margin_item: int | None
    cover_ok: bool
    cover_witness: dict | None
    side_ok: bool
    worst_side_rel_error: float
    index_contiguity_ok: bool
    index_witness: dict | None
    tiling_rel_error: float
    tiling_ok: bool
    square_area_rel_error: float
    residual_area: float
    tail_area: float
    residual_rel_error: float
    area_identity_ok: bool
    wperim: float
    wperim_budget: float
    wtr_ratio: float
    max_height: float
    height_bound: float
    height_ok: bool
    discarded_area: float
    discarded_ok: bool
    bruteforce_agrees: bool | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        checks = [
            self.disjointness_ok,
            self.containment_ok,
            self.cover_ok,
            self.side_ok,
            self.index_contiguity_ok,
            self.tiling_ok,
            self.area_identity_ok,
            self.height_ok,
            self.discarded_ok,
        ]
        if self.bruteforce_agrees is not None:
            checks.append(self.bruteforce_agrees)
        return all(checks)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ok"] = self.ok
        return d


def index_contiguity(ns: Iterable[int], lo: int, hi: int) -> dict | None:
    """None when ``ns`` is exactly ``{lo, ..., hi-1}`` with no repeats."""
    seen = sorted(ns)
    if len(seen) != hi - lo:
        return {"expected_count": hi - lo, "found_count": len(seen)}
    for k, n in enumerate(seen):
        if n != lo + k:
            return {"expected": lo + k, "found": n}
    return None


def verify_certificate(cert: PackingCertificate, level: str = "fast") -> VerificationReport:
    """Run every check on ``cert``; ``level='full'`` adds the O(N^2) cross-check."""
    p = cert.params
    t = p.t
    outer = footprint(cert.outer)
    scale = cert.outer.height
    eps = SLACK_REL * scale

    sides = [side_length(s.n, t) for s in cert.squares]
    side_err = max((abs(s.side - c) / c for s, c in zip(cert.squares, sides)), default=0.0)
    boxes: list[Box] = [(s.x_lo, s.y_lo, s.x_lo + c, s.y_lo + c) for s, c in zip(cert.squares, sides)]
    boxes += [footprint(r) for r in cert.residuals]

    disj = check_disjoint(boxes, eps)
    agrees = None
    if level == "full":
        agrees = check_disjoint_bruteforce(boxes, eps).violations == disj.violations
    cont = check_containment(boxes, outer, eps)
    cover = check_cover(boxes, outer, eps)

    lo, hi = cert.claimed_n_range
    idx = index_contiguity((s.n for s in cert.squares), lo, hi)

    square_area = math.fsum(c * c for c in sides)
    residual_area = math.fsum(r.area for r in cert.residuals)
    outer_area = cert.outer.area
    tiling_err = abs(square_area + residual_area - outer_area) / outer_area
    expected_squares = partial_sum(2.0 * t, lo, hi - 1)
    sq_err = abs(square_area - expected_squares) / outer_area
    tail = tail_sum(2.0 * t, hi).value
    res_err = abs(residual_area - tail) / tail

    wperim = math.fsum(weighted_perim_term(r, p.delta) for r in cert.residuals)
    max_h = max((r.height for r in cert.residuals), default=0.0)
    h_bound = min(1.0, scale)
    notes = []
    if cert.kind == "block":
        # a lone block has no tail-sum target; only the tiling identities apply
        res_err = 0.0
        budget = math.nan
        notes.append("block certificate: residual-vs-tail and budget checks skipped")
    else:
        budget = perimeter_budget(p, hi)

    return VerificationReport(
        disjointness_ok=disj.ok,
        first_overlap=disj.first,
        overlap_count=len(disj.violations),
        containment_ok=cont.ok,
        worst_margin=cont.worst_margin,
        worst_margin_item=cont.worst_index,
        cover_ok=cover.ok,
        cover_witness=cover.witness,
        side_ok=side_err <= SIDE_RTOL,
        worst_side_rel_error=side_err,
        index_contiguity_ok=idx is None,
        index_witness=idx,
        tiling_rel_error=tiling_err,
        tiling_ok=tiling_err <= TILING_RTOL,
        square_area_rel_error=sq_err,
        residual_area=residual_area,
        tail_area=tail,
        residual_rel_error=res_err,
        area_identity_ok=res_err <= TAIL_RTOL and sq_err <= TILING_RTOL,
        wperim=wperim,
        wperim_budget=budget,
        wtr_ratio=wperim / budget,
        max_height=max_h,
        height_bound=h_bound,
        height_ok=max_h <= h_bound * (1 + 1e-15),
        discarded_area=cert.discarded_area,
        discarded_ok=cert.discarded_area <= DISCARD_RTOL * outer_area,
        bruteforce_agrees=agrees,
        notes=notes,
    )
