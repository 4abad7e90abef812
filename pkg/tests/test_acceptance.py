"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

The lines are printed in the terminal summary (see conftest.py) and each test
also fails normally, so ``pytest tests/test_acceptance.py`` is the gate.
"""
import json
import math
import time
from pathlib import Path

import numpy as np

from conftest import ACCEPTANCE, coverage, random_instance
from lbcenter import (
    Instance,
    PriceAtMost,
    bracket_search,
    brute_force_opt,
    build_tree,
    candidate_distances,
    compute_pairs,
    decide,
    net_with_assignment,
    refine_interval,
    solve_exact_distances,
    solve_wspd,
)
from lbcenter.cli import bench, check_document, format_points, generate_instance, main, parse_instance
from lbcenter.oracle import naive_net, pairwise_sq_distances

GOLDEN = Path(__file__).parent / "data" / "golden"


def record(key: str, ok: bool, detail: str) -> None:
    ACCEPTANCE[key] = (ok, detail)
    print(f"{'PASS' if ok else 'FAIL'}  criterion {key}: {detail}")
    assert ok, detail


def test_criterion_1_approximation_ratio():
    rng = np.random.default_rng(20240601)
    t0 = time.perf_counter()
    worst_exact = worst_wspd = 0.0
    bad = []
    for k in range(200):
        inst = random_instance(rng)
        opt = brute_force_opt(inst).price
        exact, wspd = solve_exact_distances(inst), solve_wspd(inst, 0.1)
        exact.check(inst)
        wspd.check(inst)
        if opt == 0:
            if exact.price != 0 or wspd.price != 0:
                bad.append(k)
            continue
        re, rw = exact.price / opt, wspd.price / opt
        worst_exact, worst_wspd = max(worst_exact, re), max(worst_wspd, rw)
        if re > 4 * (1 + 1e-9) or rw > 4.1 * (1 + 1e-9):
            bad.append(k)
    elapsed = time.perf_counter() - t0
    record(
        "1",
        not bad and elapsed < 60,
        f"200 instances, worst ratio exact {worst_exact:.3f} wspd {worst_wspd:.3f}, "
        f"{len(bad)} violations, {elapsed:.1f} s",
    )


def test_criterion_2_net_oracle_equivalence():
    rng = np.random.default_rng(7)
    mismatches = 0
    for k in range(500):
        n = int(rng.integers(1, 257))
        d = int(rng.integers(1, 5))
        layout = k % 3
        if layout == 0:
            pts = rng.random((n, d))
        elif layout == 1:
            pts = rng.integers(0, 6, (n, d)) * 0.25  # lattice: exact ties and coincident points
        else:
            pts = rng.random((n, d)) * 10 ** float(rng.uniform(-3, 3)) - 0.5
        spread = float(np.ptp(pts)) or 1.0
        r = spread * float(rng.choice([0.25, 0.5, 1.0])) if layout == 1 else spread * float(rng.uniform(0.01, 0.8))
        fast, slow = net_with_assignment(pts, r), naive_net(pts, r)
        if not (np.array_equal(fast.centers, slow.centers) and np.array_equal(fast.assignment, slow.assignment)):
            mismatches += 1
    record("2", mismatches == 0, f"500 (instance, r) pairs, {mismatches} mismatches")


def test_criterion_3_net_invariants():
    pts = generate_instance(100_000, 2, "uniform", 3)
    r = 0.01
    net_with_assignment(pts[:1000], r)  # warm-up so compilation is not timed
    t0 = time.perf_counter()
    net = net_with_assignment(pts, r)
    elapsed = time.perf_counter() - t0
    c = pts[net.centers]
    close = 0
    for i in range(0, c.shape[0], 512):
        block = c[i : i + 512]
        dx = block[:, None, 0] - c[None, :, 0]
        dy = block[:, None, 1] - c[None, :, 1]
        sq = dx * dx + dy * dy
        sq[np.arange(block.shape[0]), np.arange(i, i + block.shape[0])] = np.inf
        close += int(np.count_nonzero(sq <= r * r))
    a = pts[net.assignment]
    dx, dy = pts[:, 0] - a[:, 0], pts[:, 1] - a[:, 1]
    far = int(np.count_nonzero(dx * dx + dy * dy > r * r))
    ok = close == 0 and far == 0 and elapsed < 5
    record("3", ok, f"{net.centers.size} centers, {close} close center pairs, {far} uncovered points, {elapsed:.2f} s")


def test_criterion_4_decision_soundness():
    rng = np.random.default_rng(44)
    violations = checked = 0
    for _ in range(100):
        inst = random_instance(rng, lam_lo=2)
        opt = brute_force_opt(inst).price
        if opt == 0:
            continue
        for factor in (1 / 8, 1 / 4, 1 / 2, 1, 2, 4, 8):
            x = factor * opt
            answer = decide(inst, x)
            checked += 1
            if isinstance(answer, PriceAtMost):
                violations += not opt <= answer.x
            else:
                violations += not opt > answer.bound
    record("4", violations == 0, f"{checked} verdicts, {violations} violations")


def test_criterion_5a_dumbbell_envelope():
    rng = np.random.default_rng(55)
    bad = 0
    for k in range(100):
        n = int(rng.integers(2, 129))
        pts = rng.random((n, 2))
        if k % 4 == 0:
            pts = np.round(pts * 8) / 8
        tree = build_tree(pts)
        pairs = compute_pairs(tree, 4.0)
        cover, gen = coverage(tree, pairs)
        dist = np.sqrt(pairwise_sq_distances(pts))
        distinct = dist > 0
        ok = np.all(cover[distinct] == 1) and np.all(cover[~distinct] == 0)
        g, dd = gen[distinct], dist[distinct]
        ok = ok and np.all(dd >= g / 2 - 1e-9 * g) and np.all(dd <= 1.5 * g + 1e-9 * g)
        bad += not ok
    record("5a", bad == 0, f"100 instances, {bad} with a coverage or envelope failure")


def test_criterion_5b_pair_count():
    ratios = {}
    for e in (10, 12, 14, 17):
        n = 2**e
        pts = generate_instance(n, 2, "uniform", e)
        ratios[n] = len(compute_pairs(build_tree(pts), 4.0)) / n
    worst = max(ratios.values())
    detail = ", ".join(f"2^{int(math.log2(n))}: {v:.1f}" for n, v in ratios.items())
    record("5b", worst < 40, f"pairs/n {detail} (target < 40)")


def test_criterion_6_refinement_contract():
    rng = np.random.default_rng(66)
    bad = runs = 0
    for _ in range(50):
        inst = random_instance(rng, lam_lo=2)
        opt = brute_force_opt(inst).price
        if opt == 0:
            continue
        interval = bracket_search(inst, candidate_distances(compute_pairs(build_tree(inst.points))))
        assert opt in interval
        for eps in (0.1, 1.0, 8.0):
            sol = refine_interval(inst, interval, eps)
            sol.check(inst)
            m = sol.meta["grid_size"]
            limit = math.ceil(math.log2(m + 1)) + 2
            runs += 1
            bad += sol.price > (4 + eps) * opt * (1 + 1e-9) or sol.meta["checks"] > limit
    record("6", bad == 0, f"{runs} refinements, {bad} violations")


def test_criterion_7_scaling():
    rows = bench([2**14, 2**15, 2**16, 2**17], repetitions=7, seed=0, lam=16, epsilon=0.5)
    net = [r.net_ratio for r in rows[1:]]
    solve = [r.solve_ratio for r in rows[1:]]
    top = rows[-1].t_solve
    ok = max(net) <= 2.5 and max(solve) <= 2.6 and top < 10
    fmt = "/".join
    record(
        "7",
        ok,
        f"doubling ratios net {fmt(f'{v:.2f}' for v in net)} (<= 2.5), "
        f"solve {fmt(f'{v:.2f}' for v in solve)} (<= 2.6), 2^17 solve {top:.2f} s",
    )


def _degenerate_table():
    rng = np.random.default_rng(88)
    cases = []
    for n, d in [(1, 1), (1, 2), (5, 2), (40, 3), (7, 1), (100, 2)]:
        cases.append((f"lam1 n={n} d={d}", rng.random((n, d)), 1, 0.0))
    for groups, size, lam in [(1, 3, 3), (2, 2, 2), (3, 4, 2), (5, 3, 3), (2, 6, 4), (4, 1, 1)]:
        pts = np.repeat(rng.random((groups, 2)), size, axis=0)
        cases.append((f"dups {groups}x{size} lam={lam}", rng.permutation(pts), lam, 0.0))
    for n, lam in [(1, 2), (3, 4), (4, 5), (10, 11), (2, 100)]:
        cases.append((f"lam>n n={n} lam={lam}", rng.random((n, 2)), lam, "infeasible"))
    cases.append(("dups but group too small", np.array([[0.0, 0.0]] * 3 + [[1.0, 0.0]] * 2), 3, "positive"))
    cases.append(("all identical lam=n", np.zeros((6, 2)), 6, 0.0))
    cases.append(("two points lam=2", np.array([[0.0, 0.0], [0.0, 2.0]]), 2, "positive"))
    return cases


def test_criterion_8_degenerate(tmp_path, capsys):
    cases = _degenerate_table()
    assert len(cases) == 20
    failed = []
    for name, pts, lam, expect in cases:
        path = tmp_path / "in.txt"
        path.write_text(format_points(pts))
        codes, prices = [], []
        for algo in ("wspd", "exact-distances"):
            out = tmp_path / f"{algo}.json"
            codes.append(main(["solve", "--input", str(path), "--lambda", str(lam), "--algo", algo, "--output", str(out)]))
            if codes[-1] == 0:
                prices.append(json.loads(out.read_text())["price"])
        if expect == "infeasible":
            ok = codes == [1, 1]
        elif expect == "positive":
            ok = codes == [0, 0] and all(p > 0 for p in prices)
        else:
            ok = codes == [0, 0] and prices == [0.0, 0.0]
        if not ok:
            failed.append(name)
    capsys.readouterr()
    record("8", not failed, f"{len(cases) - len(failed)}/{len(cases)} degenerate cases" + (f", failed: {failed}" if failed else ""))


def test_criterion_9_cli_round_trip(tmp_path, capsys):
    manifest = json.loads((GOLDEN / "manifest.json").read_text())
    problems = []
    for name, entry in sorted(manifest.items()):
        src = GOLDEN / entry["file"]
        inst = Instance(parse_instance(src.read_text()), entry["lambda"])
        for algo in ("wspd", "exact-distances"):
            out = tmp_path / f"{name}-{algo}.json"
            if main(["solve", "--input", str(src), "--lambda", str(entry["lambda"]), "--algo", algo, "--output", str(out)]) != 0:
                problems.append(f"{name}/{algo}: nonzero exit")
                continue
            doc = json.loads(out.read_text())
            try:
                check_document(inst, doc)
            except AssertionError as exc:
                problems.append(f"{name}/{algo}: {exc}")
            opt = entry.get("oracle_price")
            bound = 4.5 if algo == "wspd" else 4.0
            if opt is not None and not opt <= doc["price"] <= bound * opt * (1 + 1e-9):
                problems.append(f"{name}/{algo}: price {doc['price']} vs oracle {opt}")
        if "gen" in entry:
            n, d, kind, seed = entry["gen"]
            args = ["gen", "--n", str(n), "--d", str(d), "--kind", kind, "--seed", str(seed)]
            a, b = tmp_path / "a.txt", tmp_path / "b.txt"
            main(args + ["--output", str(a)])
            main(args + ["--output", str(b)])
            if not a.read_bytes() == b.read_bytes() == src.read_bytes():
                problems.append(f"{name}: gen output differs")
    capsys.readouterr()
    record("9", not problems, f"{len(manifest)} golden instances, {len(problems)} problems" + (f": {problems[:3]}" if problems else ""))
