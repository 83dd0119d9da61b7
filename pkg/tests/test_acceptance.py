"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

import itertools
import json
import math
import random
import time

import pytest

from squarepack.block import BlockSpec, pack_block, pack_spec
from squarepack.certificate import PackingCertificate
from squarepack.cli import main
from squarepack.engine import init, step
from squarepack.geometry import PlacedSquare, Rect, unweighted_perim
from squarepack.series import Params, side_length, tail_sum
from squarepack.verify import (
    check_containment,
    check_disjoint,
    check_disjoint_bruteforce,
    footprint,
    verify_certificate,
)


def announce(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'}: {detail}")


def block_corpus(count=120, seed=20240601):
    """Random targets in the block's own frame, ``M s <= w <= h <= 3 M s``."""
    rng = random.Random(seed)
    combos = list(itertools.product([0.6, 0.75, 0.9], [4, 8, 16, 32], [10**5, 10**7]))
    out = []
    for k in range(count):
        t, M, n0 = combos[k % len(combos)]
        s = side_length(n0, t)
        w = rng.uniform(M * s, 3 * M * s)
        h = rng.uniform(w, 3 * M * s)
        rect = Rect(0.0, 0.0, w, h) if rng.random() < 0.5 else Rect(0.0, 0.0, h, w)
        out.append((rect, n0, Params(t, M, n0)))
    return out


@pytest.fixture(scope="module")
def packed_corpus():
    specs = block_corpus()
    start = time.perf_counter()
    results = [pack_block(rect, n0, p) for rect, n0, p in specs]
    return specs, results, time.perf_counter() - start


def test_criterion_1_block_perfect_cover(packed_corpus, capsys):
    specs, results, pack_time = packed_corpus
    start = time.perf_counter()
    worst_area = worst_overlap = 0.0
    worst_margin = math.inf
    failures = 0
    for (rect, n0, p), res in zip(specs, results):
        s0 = side_length(n0, p.t)
        area = math.fsum([q.area for q in res.squares] + [g.area for g in res.gaps] + [res.discarded_area])
        area_err = abs(area - rect.area) / rect.area
        boxes = [footprint(q) for q in res.squares] + [footprint(g) for g in res.gaps]
        disj = check_disjoint(boxes, 1e-12 * s0)
        cont = check_containment(boxes, footprint(rect), 1e-12 * s0)
        worst_area = max(worst_area, area_err)
        worst_margin = min(worst_margin, cont.worst_margin / s0)
        if disj.violations:
            worst_overlap = max(worst_overlap, max(v[2] for v in disj.violations))
        failures += not (area_err <= 1e-10 and disj.ok and cont.ok)
    elapsed = pack_time + time.perf_counter() - start
    ok = failures == 0 and len(specs) >= 100 and elapsed < 5.0
    announce(
        capsys, 1, ok,
        f"{len(specs)} blocks, {sum(len(r.squares) for r in results)} squares; max area rel err {worst_area:.2e}; "
        f"worst containment margin {worst_margin:.2e} s; overlaps {worst_overlap:.1e}; {elapsed:.2f} s",
    )
    assert ok


def test_criterion_2_gap_census(capsys):
    s = side_length(10**6, 0.75)
    p = Params(0.75, 2, 10**6)
    fig = pack_spec(BlockSpec(Rect(0.0, 0.0, 3.5 * s, 4.5 * s), 10**6, p, 3, 4))
    ok = len(fig.squares) == 12 and fig.gap_counts == {"surround": 6, "left": 4, "top": 3, "corner": 1}
    rng = random.Random(7)
    mismatches = []
    for _ in range(50):
        M1 = rng.randint(1, 24)
        M2 = rng.randint(M1, 3 * max(M1, 2))
        rect = Rect(0.0, 0.0, (M1 + rng.uniform(0.05, 0.95)) * s, (M2 + rng.uniform(0.05, 0.95)) * s)
        if not rect.is_portrait:
            rect = rect.swapped()
        res = pack_spec(BlockSpec(rect, 10**6, p, M1, M2))
        want = {"surround": (M1 - 1) * (M2 - 1), "left": M2, "top": M1, "corner": 1}
        if res.gap_counts != want or len(res.squares) != M1 * M2:
            mismatches.append((M1, M2, res.gap_counts))
    ok = ok and not mismatches
    announce(capsys, 2, ok, f"M1=3,M2=4 -> 12 squares, {fig.gap_counts}; 50 random grids, {len(mismatches)} mismatches")
    assert ok


def test_criterion_3_perimeter_gain(capsys):
    n0, t = 10**7, 0.75
    ratios = {}
    for M in (4, 8, 16, 32):
        s = side_length(n0, t)
        res = pack_block(Rect(0.0, 0.0, M * s, M * s), n0, Params(t, M, n0))
        ratios[M] = unweighted_perim(res.gaps) / unweighted_perim([Rect(q.x_lo, q.y_lo, q.x_hi, q.y_hi) for q in res.squares])
    products = {M: r * M for M, r in ratios.items()}
    decreasing = all(ratios[a] > ratios[b] for a, b in [(4, 8), (8, 16), (16, 32)])
    band = max(products.values()) / min(products.values())
    fitted = math.exp(sum(math.log(v) for v in products.values()) / len(products))
    ok = decreasing and band < 4
    detail = ", ".join(f"M={M}: {r:.5f}" for M, r in ratios.items())
    announce(capsys, 3, ok, f"gap/square perimeter {detail}; ratio*M band {band:.4f}; fitted c = {fitted:.4f} (ratio ~ c/M)")
    assert ok


def test_criterion_4_adjacency_bit_exact(packed_corpus, capsys):
    specs, results, _ = packed_corpus
    pairs = broken = exact_difference = 0
    for (rect, _, _), res in zip(specs, results):
        sq = res.squares if rect.is_portrait else [q.swapped() for q in res.squares]
        M1, M2 = res.M1, res.M2
        for j in range(M2):
            for i in range(M1):
                q = sq[j * M1 + i]
                nbrs = []
                if i + 1 < M1:
                    nbrs.append((sq[j * M1 + i + 1].x_lo, q.x_lo))
                if j + 1 < M2:
                    nbrs.append((sq[(j + 1) * M1 + i].y_lo, q.y_lo))
                for nxt, cur in nbrs:
                    pairs += 1
                    broken += nxt != cur + q.side
                    exact_difference += nxt - cur == q.side
    ok = broken == 0 and pairs > 0
    announce(
        capsys, 4, ok,
        f"{pairs} neighbour pairs, next == cur + n^-t bit-for-bit in {pairs - broken}; "
        f"(next - cur) == n^-t exactly in {exact_difference} (the difference form is limited by rounding)",
    )
    assert ok


def test_criterion_5_engine_conservation(capsys):
    p = Params(0.75, 4, 10**4)
    target = 10**4
    start = time.perf_counter()
    state = init(p)
    total = tail_sum(2 * p.t, p.n0).value
    heights = [state.family.max_height()]
    problems = []
    worst_area = worst_decomp = worst_cons = 0.0
    while len(state.placed) < target:
        step(state)
        rec = state.ledger[-1]
        if [q.n for q in state.placed[-(rec.n_after - rec.n_before):]] != list(range(rec.n_before, rec.n_after)):
            problems.append(f"index gap at step {rec.step}")
        placed = math.fsum(q.area for q in state.placed)
        cons = abs(placed + state.family.recompute_area() - total) / total
        worst_cons = max(worst_cons, cons)
        worst_area = max(worst_area, abs(rec.area - rec.tail) / rec.tail)
        worst_decomp = max(worst_decomp, rec.decomposition_error)
        heights.append(rec.max_height)
    elapsed = time.perf_counter() - start
    contiguous = [q.n for q in state.placed] == list(range(p.n0, state.n_current))
    monotone = all(b <= a for a, b in zip(heights, heights[1:]))
    vr = verify_certificate(PackingCertificate.from_state(state))
    ok = (
        not problems and contiguous and monotone and worst_cons <= 1e-8 and worst_area <= 1e-8
        and worst_decomp <= 1e-12 and elapsed < 60 and vr.ok
    )
    announce(
        capsys, 5, ok,
        f"t=0.75 M=4 n0=1e4: {len(state.placed)} squares in {len(state.ledger)} steps, {elapsed:.2f} s; "
        f"area vs tail {worst_area:.1e}, conservation {worst_cons:.1e}, perim_delta decomposition {worst_decomp:.1e}; "
        f"heights non-increasing {monotone}; contiguous {contiguous}; verifier {'ok' if vr.ok else 'FAILED'}",
    )
    assert ok


def _adversarial(rng, n):
    grid = rng.choice([4, 8, 16, 32])
    out = []
    for _ in range(n):
        x, y = rng.randrange(grid) / grid, rng.randrange(grid) / grid
        roll = rng.random()
        if roll < 0.5:
            w, h = rng.randint(1, 2) / grid, rng.randint(1, 2) / grid
        elif roll < 0.75 and out:
            bx = rng.choice(out)
            x, y = bx[0] + (bx[2] - bx[0]) / 4, bx[1] + (bx[3] - bx[1]) / 4
            w, h = (bx[2] - bx[0]) / 2, (bx[3] - bx[1]) / 2
        else:
            w, h = rng.uniform(1e-4, 0.05), rng.uniform(1e-4, 0.05)
        out.append((x, y, x + w, y + h))
    return out


def test_criterion_6_verifier_oracle(packed_corpus, capsys):
    specs, results, _ = packed_corpus
    rng = random.Random(606)
    disagreements = 0
    kinds = {"adversarial": 0, "random": 0, "packed": 0}
    for k in range(200):
        kind = ("adversarial", "random", "packed")[k % 3]
        n = rng.randint(2, 2000)
        if kind == "adversarial":
            boxes = _adversarial(rng, n)
        elif kind == "random":
            boxes = []
            for _ in range(n):
                x, y = rng.random(), rng.random()
                boxes.append((x, y, x + rng.uniform(1e-4, 0.03), y + rng.uniform(1e-4, 0.03)))
        else:
            res = results[rng.randrange(len(results))]
            boxes = ([footprint(q) for q in res.squares] + [footprint(g) for g in res.gaps])[:2000]
        eps = rng.choice([0.0, 1e-12])
        kinds[kind] += 1
        disagreements += check_disjoint(boxes, eps).violations != check_disjoint_bruteforce(boxes, eps).violations

    from squarepack.engine import run

    state, _ = run(init(Params(0.75, 4, 10**4)), max_squares=1500)
    cert = PackingCertificate.from_state(state)
    baseline = verify_certificate(cert).ok
    scale = cert.outer.height
    missed = []
    picks = rng.sample(range(len(cert.squares)), 8)
    for k in picks:
        sq = cert.squares[k]
        for dx, dy in [(2e-9, 0.0), (-2e-9, 0.0), (0.0, 2e-9), (0.0, -2e-9)]:
            moved = PlacedSquare(sq.n, sq.side, sq.x_lo + dx * scale, sq.y_lo + dy * scale)
            mutated = PackingCertificate(cert.params, cert.outer, cert.squares[:k] + [moved] + cert.squares[k + 1:],
                                         cert.residuals, cert.claimed_n_range, cert.discarded_area)
            if verify_certificate(mutated).ok:
                missed.append(("shift", k, dx, dy))
    for k in rng.sample(range(len(cert.residuals)), 8):
        mutated = PackingCertificate(cert.params, cert.outer, cert.squares, cert.residuals[:k] + cert.residuals[k + 1:],
                                     cert.claimed_n_range, cert.discarded_area)
        if verify_certificate(mutated).ok:
            missed.append(("delete gap", k))
    for k in picks:
        mutated = PackingCertificate(cert.params, cert.outer, cert.squares + [cert.squares[k]], cert.residuals,
                                     cert.claimed_n_range, cert.discarded_area)
        if verify_certificate(mutated).ok:
            missed.append(("duplicate", k))
    ok = disagreements == 0 and baseline and not missed
    announce(
        capsys, 6, ok,
        f"200 corpora {kinds}, {disagreements} sweep/brute-force disagreements; "
        f"48 mutations (32 shifts, 8 gap deletions, 8 duplicates), {len(missed)} undetected; clean certificate accepted {baseline}",
    )
    assert ok


def test_criterion_7_series(capsys):
    v = tail_sum(2, 2)
    basel = abs(v.value - (math.pi**2 / 6 - 1)) <= v.error_bound
    tight = v.error_bound <= 1e-14 * v.value
    rng = random.Random(77)
    grid = [(s, n0) for s in (1.1, 1.2, 1.5, 1.8, 2.0, 3.0) for n0 in (1, 2, 63, 10**4, rng.randint(10**5, 10**9))]
    worst = 0.0
    for s, n0 in grid:
        a, b = tail_sum(s, n0), tail_sum(s, n0 + 1)
        slack = a.error_bound + b.error_bound
        worst = max(worst, abs(a.value - b.value - side_length(n0, s)) / slack)
    ok = basel and tight and worst <= 1.0 and len(grid) == 30
    announce(
        capsys, 7, ok,
        f"tail_sum(2,2) = {v.value!r} +/- {v.error_bound:.2e} (bound/value {v.error_bound / v.value:.2e}); "
        f"shift identity on {len(grid)} points uses at most {worst:.3f} of the combined bound",
    )
    assert ok


def test_criterion_8_termination_branch(tmp_path, capsys):
    report = tmp_path / "report.json"
    code = main(["pack", "--t", "0.75", "--m", "4", "--n0", "10", "--report", str(report), "--out", str(tmp_path / "c.json")])
    data = json.loads(report.read_text())
    failure = data["report"]["failure"] or {}
    ok = (
        code == 0
        and data["status"] == "terminated-with-error"
        and failure.get("kind") in ("WidthTooSmall", "PreconditionViolation")
        and failure.get("lhs", 0) < failure.get("rhs", 0)
    )
    announce(
        capsys, 8, ok,
        f"exit {code}, status {data['status']}, {failure.get('kind')}: {failure.get('inequality')} "
        f"(lhs {failure.get('lhs', float('nan')):.6g} < rhs {failure.get('rhs', float('nan')):.6g}, n={failure.get('n')})",
    )
    assert ok
