"""The packing loop: pick the widest residual, cut strips, pack blocks.

Each step removes the widest rectangle R of the residual family, shaves a
column of width ``M s`` (``s = n**-t`` for the next index n) off the side
nearest the origin, cuts that column into strips of height in
``[M s, 2 M s)`` and packs every strip with one block.  The rest of R and
all gap rectangles go back into the family.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

from .block import BlockResult, ContainmentFailure, PreconditionViolation, choose_M1_M2, pack_block
from .geometry import Family, PlacedSquare, Rect, make_rect, weighted_perim_term
from .series import CompensatedSum, Params, budget_prefactor, partial_sum, side_length, tail_sum

log = logging.getLogger(__name__)

AREA_RTOL = 1e-8
DECOMP_RTOL = 1e-12


class WidthTooSmall(RuntimeError):
    """No residual rectangle is at least ``2 M s`` wide."""

    def __init__(self, width: float, threshold: float, n_current: int, rect: Rect):
        self.width = width
        self.threshold = threshold
        self.n_current = n_current
        self.rect = rect
        super().__init__(f"widest residual has w={width!r} < 2*M*s={threshold!r} at n={n_current}")

    def as_dict(self) -> dict:
        return {
            "kind": "WidthTooSmall",
            "inequality": "w(R) >= 2*M*s",
            "lhs": self.width,
            "rhs": self.threshold,
            "margin": self.width - self.threshold,
            "n": self.n_current,
        }


class InvariantViolation(RuntimeError):
    """A bookkeeping identity failed; the packing itself is suspect."""


@dataclass
class StepRecord:
    step: int
    n_before: int
    n_after: int
    strips: int
    blocks_packed: int
    area: float
    tail: float
    placed_area: float
    conservation_error: float
    wperim: float
    wperim_recomputed: float
    budget: float
    budget_ratio: float
    removed_term: float
    r0_term: float
    added_term: float
    delta: float
    decomposition_error: float
    max_height: float
    index_ratio: float
    family_size: int
    block_sizes: list[int] = field(default_factory=list)


@dataclass
class PackingState:
    params: Params
    outer: Rect
    n_current: int
    family: Family
    placed: list[PlacedSquare] = field(default_factory=list)
    ledger: list[StepRecord] = field(default_factory=list)
    discarded_area: float = 0.0
    placed_area: CompensatedSum = field(default_factory=CompensatedSum)
    budget_series: CompensatedSum = field(default_factory=CompensatedSum)
    initial_area: float = 0.0
    initial_wperim: float = 0.0
    initial_budget: float = 0.0
    halted: str | None = None
    failure: dict | None = None

    @property
    def budget(self) -> float:
        return budget_prefactor(self.params) * self.budget_series.value

    @property
    def squares_placed(self) -> int:
        return len(self.placed)


@dataclass
class RunReport:
    status: str
    squares_placed: int
    steps: int
    n0: int
    n_final: int
    residual_area: float
    tail_area: float
    residual_rel_error: float
    max_height: float
    initial_height: float
    initial_wperim: float
    initial_budget: float
    max_budget_ratio: float
    max_index_ratio: float
    discarded_area: float
    wperim_trajectory: list[float]
    budget_trajectory: list[float]
    failure: dict | None

    def to_dict(self) -> dict:
        return asdict(self)


def init(params: Params) -> PackingState:
    """A single square whose area is the whole tail ``sum(n**-2t, n >= n0)``."""
    area = tail_sum(2.0 * params.t, params.n0).value
    side = math.sqrt(area)
    outer = Rect(0.0, 0.0, side, side, "outer")
    family = Family(params.delta, [outer.with_tag("initial")])
    state = PackingState(params, outer, params.n0, family)
    state.budget_series.add(partial_sum(params.perimeter_exponent, 1, params.n0 - 1))
    state.initial_area = family.cached_area
    state.initial_wperim = family.cached_wperim
    state.initial_budget = state.budget
    if state.initial_wperim > state.initial_budget:
        log.info("initial weighted perimeter %.6g exceeds budget %.6g", state.initial_wperim, state.initial_budget)
    return state


def select_widest(family: Family) -> Rect:
    return family.widest()[1]


def split(r: Rect, n_current: int, params: Params) -> tuple[Rect | None, list[Rect]]:
    """Cut a column of width ``M s`` off ``r`` and slice it into strips.

    Strip heights lie in ``[M s, 2 M s)`` and add up to ``h(r)``; the last
    strip absorbs the remainder.  Returns ``(R0, strips)`` with ``R0`` None
    when the column consumes all of ``r``.
    """
    s = side_length(n_current, params.t)
    step = params.M * s
    if r.width < 2.0 * step:
        raise WidthTooSmall(r.width, 2.0 * step, n_current, r)
    if not r.is_portrait:
        r0, strips = split(r.swapped(), n_current, params)
        return (r0.swapped() if r0 is not None else None), [st.swapped() for st in strips]

    cut = r.x_lo + step
    r0 = make_rect(cut, r.y_lo, r.x_hi, r.y_hi, 0.0, "R0")
    strips: list[Rect] = []
    lo = r.y_lo
    k = 1
    while r.y_hi - lo >= 2.0 * step:
        hi = r.y_lo + k * step
        strips.append(Rect(r.x_lo, lo, cut, hi, "strip"))
        lo = hi
        k += 1
    strips.append(Rect(r.x_lo, lo, cut, r.y_hi, "strip"))
    if len(strips) > n_current**params.t:
        raise InvariantViolation(f"{len(strips)} strips exceeds n**t at n={n_current}")
    return r0, strips


def _rel(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale > 0 else 0.0


def step(state: PackingState) -> PackingState:
    """Advance the packing by one widest-rectangle subdivision.

    Raises :class:`WidthTooSmall` before touching the state.  A strip that
    fails the block precondition stops the step: strips packed so far are
    committed, the remaining ones stay in the family, and the
    :class:`PreconditionViolation` propagates.  When the next block would
    cross ``n_max`` the step stops the same way and sets ``state.halted``.
    """
    p = state.params
    fam = state.family
    if state.halted:
        return state
    if p.n_max is not None and state.n_current >= p.n_max:
        state.halted = "n_max"
        return state
    key, r = fam.widest()
    r0, strips = split(r, state.n_current, p)

    n_before = state.n_current
    wperim_before = fam.recompute_wperim()
    fam.remove(key)
    removed = weighted_perim_term(r, p.delta)
    added = CompensatedSum()
    r0_term = 0.0
    if r0 is not None:
        fam.add(r0)
        r0_term = weighted_perim_term(r0, p.delta)

    packed = 0
    sizes: list[int] = []
    error: Exception | None = None
    n_run = state.n_current
    for strip in strips:
        try:
            if p.n_max is not None:
                M1, M2 = choose_M1_M2(strip, n_run, p)
                if n_run + M1 * M2 > p.n_max:
                    state.halted = "n_max"
                    break
            res: BlockResult = pack_block(strip, n_run, p)
        except (PreconditionViolation, ContainmentFailure) as exc:
            error = exc
            break
        state.placed.extend(res.squares)
        for sq in res.squares:
            state.placed_area += sq.area
        for g in res.gaps:
            fam.add(g)
            added += weighted_perim_term(g, p.delta)
        state.discarded_area += res.discarded_area
        sizes.append(res.n0_next - n_run)
        n_run = res.n0_next
        packed += 1
    for strip in strips[packed:]:
        fam.add(strip)
        added += weighted_perim_term(strip, p.delta)

    if n_run > n_before:
        state.budget_series.add(partial_sum(p.perimeter_exponent, n_before, n_run - 1))
    state.n_current = n_run
    _record(state, n_before, len(strips), packed, removed, r0_term, added.value, wperim_before)
    state.ledger[-1].block_sizes = sizes

    if error is not None:
        raise error
    return state


def _record(state, n_before, strips, packed, removed, r0_term, added, wperim_before) -> None:
    p = state.params
    fam = state.family
    tail = tail_sum(2.0 * p.t, state.n_current).value
    area = fam.cached_area
    wperim = fam.cached_wperim
    fresh = fam.recompute_wperim()
    delta = -removed + r0_term + added
    budget = state.budget
    rec = StepRecord(
        step=len(state.ledger) + 1,
        n_before=n_before,
        n_after=state.n_current,
        strips=strips,
        blocks_packed=packed,
        area=area,
        tail=tail,
        placed_area=state.placed_area.value,
        conservation_error=_rel(state.placed_area.value + area, state.initial_area),
        wperim=wperim,
        wperim_recomputed=fresh,
        budget=budget,
        budget_ratio=wperim / budget,
        removed_term=removed,
        r0_term=r0_term,
        added_term=added,
        delta=delta,
        decomposition_error=abs((fresh - wperim_before) - delta) / fresh if fresh > 0 else 0.0,
        max_height=fam.max_height(),
        index_ratio=state.n_current / n_before,
        family_size=len(fam),
    )
    state.ledger.append(rec)
    if _rel(area, tail) > AREA_RTOL:
        raise InvariantViolation(f"residual area {area!r} != tail {tail!r} at n={state.n_current}")
    if rec.conservation_error > AREA_RTOL:
        raise InvariantViolation(f"area not conserved at step {rec.step}: rel err {rec.conservation_error:.3e}")
    if rec.decomposition_error > DECOMP_RTOL:
        raise InvariantViolation(f"weighted perimeter update off by {rec.decomposition_error:.3e} at step {rec.step}")
    if rec.max_height > state.outer.height:
        raise InvariantViolation(f"family height grew to {rec.max_height!r}")
    if rec.budget_ratio > 1.0:
        log.info("step %d: weighted perimeter exceeds budget (ratio %.4g)", rec.step, rec.budget_ratio)


def run(
    state: PackingState,
    max_squares: int | None = None,
    max_steps: int | None = None,
) -> tuple[PackingState, RunReport]:
    """Iterate :func:`step` until a stop condition or an algorithmic error.

    ``max_squares`` caps the total number placed (it tightens ``n_max``).
    Algorithmic failures (too-narrow family, block precondition) end the
    run with status ``terminated-with-error``; :class:`InvariantViolation`
    propagates.
    """
    p = state.params
    if max_squares is not None:
        cap = p.n0 + max_squares
        n_max = cap if p.n_max is None else min(cap, p.n_max)
        state.params = p = Params(p.t, p.M, p.n0, n_max)
    steps = 0
    while not state.halted and (max_steps is None or steps < max_steps):
        if p.n_max is not None and state.n_current >= p.n_max:
            state.halted = "n_max"
            break
        try:
            step(state)
        except (WidthTooSmall, PreconditionViolation, ContainmentFailure) as exc:
            state.halted = "error"
            state.failure = exc.as_dict() if hasattr(exc, "as_dict") else {"kind": type(exc).__name__, "message": str(exc)}
            break
        steps += 1
    return state, report(state)


def report(state: PackingState) -> RunReport:
    p = state.params
    fam = state.family
    tail = tail_sum(2.0 * p.t, state.n_current).value
    area = fam.recompute_area()
    if state.halted == "error":
        status = "terminated-with-error"
    elif state.halted == "n_max":
        status = "budget-reached"
    else:
        status = "running"
    ledger = state.ledger
    return RunReport(
        status=status,
        squares_placed=len(state.placed),
        steps=len(ledger),
        n0=p.n0,
        n_final=state.n_current,
        residual_area=area,
        tail_area=tail,
        residual_rel_error=_rel(area, tail),
        max_height=fam.max_height(),
        initial_height=state.outer.height,
        initial_wperim=state.initial_wperim,
        initial_budget=state.initial_budget,
        max_budget_ratio=max([state.initial_wperim / state.initial_budget] + [r.budget_ratio for r in ledger]),
        max_index_ratio=max([1.0] + [r.index_ratio for r in ledger]),
        discarded_area=state.discarded_area,
        wperim_trajectory=[state.initial_wperim] + [r.wperim for r in ledger],
        budget_trajectory=[state.initial_budget] + [r.budget for r in ledger],
        failure=state.failure,
    )
