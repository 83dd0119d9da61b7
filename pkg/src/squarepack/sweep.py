"""Parameter sweeps over (t, M, n0): how far does the packing get?"""

from __future__ import annotations

import csv
import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

from . import engine
from .series import Params

CSV_FIELDS = ("t", "M", "n0", "squares_placed", "failure_mode", "max_budget_ratio", "wall_time_ms")


@dataclass
class SweepRow:
    t: float
    M: int
    n0: int
    squares_placed: int
    failure_mode: str
    max_budget_ratio: float
    wall_time_ms: float


def run_point(t: float, M: int, n0: int, budget: int) -> SweepRow:
    start = time.perf_counter()
    state = engine.init(Params(t, M, n0))
    _, rep = engine.run(state, max_squares=budget)
    mode = "none" if rep.failure is None else f"{rep.failure['kind']}: {rep.failure.get('inequality', '')}"
    elapsed = (time.perf_counter() - start) * 1e3
    return SweepRow(t, M, n0, rep.squares_placed, mode, rep.max_budget_ratio, round(elapsed, 3))


def run_grid(ts, Ms, n0s, budget: int, workers: int = 1) -> list[SweepRow]:
    """Rows in grid order (t outermost, n0 innermost) whatever the worker count."""
    grid = list(itertools.product(ts, Ms, n0s))
    if workers <= 1:
        return [run_point(t, M, n0, budget) for t, M, n0 in grid]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_point, t, M, n0, budget) for t, M, n0 in grid]
        return [f.result() for f in futures]


def monotonicity_findings(rows: list[SweepRow]) -> list[str]:
    """Places where a larger n0 failed earlier than a smaller one at the same (t, M).

    Runs that stopped at the square budget count as unbounded; their
    counts differ only by how many whole blocks fit under the cap.
    """

    def reach(r: SweepRow) -> float:
        return float("inf") if r.failure_mode == "none" else r.squares_placed

    findings = []
    groups: dict[tuple[float, int], list[SweepRow]] = {}
    for r in rows:
        groups.setdefault((r.t, r.M), []).append(r)
    for (t, M), rs in groups.items():
        rs = sorted(rs, key=lambda r: r.n0)
        for a, b in zip(rs, rs[1:]):
            if reach(b) < reach(a):
                findings.append(
                    f"t={t} M={M}: n0={b.n0} placed {b.squares_placed} < {a.squares_placed} at n0={a.n0}"
                )
    return findings


def write_csv(rows: list[SweepRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for r in rows:
            writer.writerow(asdict(r))
