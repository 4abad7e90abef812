"""Command-line front end: ``solve``, ``oracle``, ``gen`` and ``bench``.

Exit codes: 0 ok, 1 infeasible, 2 input parse error, 3 usage error, 4 oracle size cap.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import statistics
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from lbcenter.geometry import InfeasibleError, Instance, InstanceError, Solution, price_of, validate_instance
from lbcenter.grid import compute_net
from lbcenter.oracle import DEFAULT_CAP, OracleSizeError, brute_force_opt
from lbcenter.solver import solve_exact_distances, solve_wspd

EXIT_OK, EXIT_INFEASIBLE, EXIT_PARSE, EXIT_USAGE, EXIT_ORACLE_CAP = 0, 1, 2, 3, 4
ALGORITHMS = ("exact-distances", "wspd", "oracle")
MASK64 = (1 << 64) - 1


class ParseError(InstanceError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class UsageError(Exception):
    pass


def parse_instance(text: str) -> np.ndarray:
    """One point per line, fields split on commas and/or whitespace; '#' lines are comments."""
    rows: list[list[float]] = []
    width = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = re.split(r"\s*,\s*|\s+", line)
        try:
            row = [float(f) for f in fields]
        except ValueError:
            raise ParseError(f"non-numeric field in {line!r}", lineno) from None
        if not all(math.isfinite(v) for v in row):
            raise ParseError(f"non-finite coordinate in {line!r}", lineno)
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(f"expected {width} fields, found {len(row)}", lineno)
        rows.append(row)
    if not rows:
        raise ParseError("no data lines")
    return np.array(rows, dtype=np.float64)


def format_points(points: np.ndarray) -> str:
    return "".join(" ".join(repr(float(v)) for v in row) + "\n" for row in points)


class SplitMix64:
    """64-bit splitmix generator; identical streams on every platform."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next64() >> 11) * 2.0**-53

    def normal_pair(self) -> tuple[float, float]:
        u1, u2 = self.uniform(), self.uniform()
        radius = math.sqrt(-2.0 * math.log(1.0 - u1))
        return radius * math.cos(2.0 * math.pi * u2), radius * math.sin(2.0 * math.pi * u2)


BLOB_SIGMA = 0.02


def blob_count(n: int) -> int:
    m = math.isqrt(n)
    return m if m * m == n else m + 1


def generate_instance(n: int, d: int = 2, kind: str = "uniform", seed: int = 0) -> np.ndarray:
    """Seeded point set: uniform in [0,1)^d, or Gaussian blobs around uniform centers.

    Blob kind: ceil(sqrt n) centers are drawn first, then point i joins blob
    i mod m and takes d normal deviates (Box-Muller, both outputs used in order).
    """
    if n < 1 or d < 1:
        raise UsageError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    rng = SplitMix64(seed)
    if kind == "uniform":
        return np.array([[rng.uniform() for _ in range(d)] for _ in range(n)])
    if kind != "clusters":
        raise UsageError(f"unknown instance kind {kind!r}")
    m = blob_count(n)
    centers = [[rng.uniform() for _ in range(d)] for _ in range(m)]
    spare: list[float] = []
    out = []
    for i in range(n):
        row = []
        for k in range(d):
            if not spare:
                spare = list(rng.normal_pair())
            row.append(centers[i % m][k] + BLOB_SIGMA * spare.pop(0))
        out.append(row)
    return np.array(out)


PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def _num(v) -> str:
    return repr(float(v))


def render_svg(inst: Instance, solution: Solution) -> str:
    """Points colored by cluster, with a ring of radius ``price`` around each enlarged center."""
    if inst.d != 2:
        raise UsageError(f"SVG output needs d = 2, got d = {inst.d}")
    pts = inst.points
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    extent = float((hi - lo).max()) or 1.0
    margin = 0.05 * extent
    dot = extent / 200.0
    # zero-price rings still get a visible radius
    ring = max(solution.price, 2 * dot)
    # y is flipped so the picture has the usual orientation
    box = (lo[0] - margin, -hi[1] - margin, hi[0] - lo[0] + 2 * margin, hi[1] - lo[1] + 2 * margin)
    color = {int(c): PALETTE[k % len(PALETTE)] for k, c in enumerate(solution.centers)}
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{" ".join(_num(v) for v in box)}">']
    for i, (x, y) in enumerate(pts):
        c = color[int(solution.assignment[i])]
        out.append(f'<circle class="point" cx="{_num(x)}" cy="{_num(-y)}" r="{_num(dot)}" fill="{c}"/>')
    for c in solution.centers:
        x, y = pts[c]
        out.append(f'<circle class="center" cx="{_num(x)}" cy="{_num(-y)}" r="{_num(2.5 * dot)}" fill="{color[int(c)]}"/>')
        out.append(
            f'<circle class="ring" cx="{_num(x)}" cy="{_num(-y)}" r="{_num(ring)}" fill="none" '
            f'stroke="{color[int(c)]}" stroke-width="{_num(dot / 2)}"/>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(inst: Instance, solution: Solution, path) -> None:
    Path(path).write_text(render_svg(inst, solution))


def result_document(inst: Instance, solution: Solution, algorithm: str, epsilon: float | None) -> dict:
    return {
        "n": inst.n,
        "d": inst.d,
        "lambda": inst.lam,
        "algorithm": algorithm,
        "epsilon": epsilon if algorithm == "wspd" else None,
        "price": solution.price,
        "centers": [int(c) for c in solution.centers],
        "assignment": [int(a) for a in solution.assignment],
    }


def check_document(inst: Instance, doc: dict) -> None:
    """Raise ``AssertionError`` unless ``doc`` is a feasible result whose price recomputes exactly."""
    centers = np.array(doc["centers"], dtype=np.int64)
    assignment = np.array(doc["assignment"], dtype=np.int64)
    assert doc["n"] == inst.n and doc["d"] == inst.d and doc["lambda"] == inst.lam
    assert list(centers) == sorted(set(centers.tolist())), "centers not sorted/unique"
    Solution(centers=centers, assignment=assignment, price=doc["price"]).check(inst)
    assert price_of(inst, centers, assignment) == doc["price"]


@dataclass
class RunConfig:
    input: str | None
    lam: int
    epsilon: float = 0.5
    algorithm: str = "wspd"
    output: str | None = None
    svg: str | None = None
    seed: int = 0

    def __post_init__(self):
        if self.lam < 1:
            raise UsageError(f"--lambda must be >= 1, got {self.lam}")
        if self.algorithm not in ALGORITHMS:
            raise UsageError(f"unknown algorithm {self.algorithm!r}")
        if self.algorithm == "wspd" and not self.epsilon > 0:
            raise UsageError(f"--epsilon must be positive, got {self.epsilon}")
        if not 0 <= self.seed <= MASK64:
            raise UsageError("--seed must be an unsigned 64-bit integer")


def solve(inst: Instance, algorithm: str, epsilon: float = 0.5, seed: int = 0) -> Solution:
    if algorithm == "wspd":
        return solve_wspd(inst, epsilon)
    if algorithm == "exact-distances":
        return solve_exact_distances(inst, seed=seed)
    return brute_force_opt(inst, cap=DEFAULT_CAP)


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def run(config: RunConfig) -> int:
    try:
        text = sys.stdin.read() if config.input in (None, "-") else Path(config.input).read_text()
    except OSError as exc:
        print(f"error: cannot read input: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        inst = Instance(parse_instance(text), config.lam)
    except InstanceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        validate_instance(inst)
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    if config.svg and inst.d != 2:
        print(f"error: --svg needs d = 2, got d = {inst.d}", file=sys.stderr)
        return EXIT_USAGE
    try:
        solution = solve(inst, config.algorithm, config.epsilon, config.seed)
    except OracleSizeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ORACLE_CAP
    doc = result_document(inst, solution, config.algorithm, config.epsilon)
    _write(config.output, json.dumps(doc) + "\n")
    if config.svg:
        emit_svg(inst, solution, config.svg)
    return EXIT_OK


@dataclass
class BenchRow:
    n: int
    t_net: float
    t_solve: float
    net_ratio: float | None
    solve_ratio: float | None


def bench(
    sizes,
    repetitions: int = 3,
    seed: int = 0,
    lam: int = 16,
    epsilon: float = 0.5,
    net_repetitions: int | None = None,
) -> list[BenchRow]:
    """Median wall time of compute_net and solve_wspd on seeded uniform instances.

    The net is two orders of magnitude cheaper than a solve, so it is timed
    ``net_repetitions`` times (default: 4 * repetitions) for a steadier median.
    """
    sizes = [int(s) for s in sizes]
    if sizes != sorted(sizes):
        raise UsageError("--sizes must be ascending")
    net_repetitions = 4 * repetitions if net_repetitions is None else net_repetitions
    warm = Instance(generate_instance(64, 2, "uniform", seed), min(lam, 64))
    solve_wspd(warm, epsilon)
    rows: list[BenchRow] = []
    for n in sizes:
        inst = Instance(generate_instance(n, 2, "uniform", seed), lam)
        # about lam points per net ball on uniform data
        radius = math.sqrt(lam / (math.pi * n))
        t_net, t_solve = [], []
        for _ in range(net_repetitions):
            t0 = time.perf_counter()
            compute_net(inst.points, radius)
            t_net.append(time.perf_counter() - t0)
        for _ in range(repetitions):
            t0 = time.perf_counter()
            solve_wspd(inst, epsilon)
            t_solve.append(time.perf_counter() - t0)
        net, sol = statistics.median(t_net), statistics.median(t_solve)
        prev = rows[-1] if rows else None
        rows.append(
            BenchRow(
                n=n,
                t_net=net,
                t_solve=sol,
                net_ratio=net / prev.t_net if prev and prev.n * 2 == n else None,
                solve_ratio=sol / prev.t_solve if prev and prev.n * 2 == n else None,
            )
        )
    return rows


def bench_table(rows: list[BenchRow]) -> str:
    def ratio(v):
        return "-" if v is None else f"{v:.2f}"

    lines = [f"{'n':>9} {'t_net[s]':>10} {'t_solve[s]':>11} {'net x2':>7} {'solve x2':>9}"]
    for r in rows:
        lines.append(f"{r.n:>9} {r.t_net:>10.4f} {r.t_solve:>11.4f} {ratio(r.net_ratio):>7} {ratio(r.solve_ratio):>9}")
    return "\n".join(lines) + "\n"


def bench_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "t_net", "t_solve", "net_ratio", "solve_ratio"])
    for r in rows:
        writer.writerow([r.n, r.t_net, r.t_solve, "" if r.net_ratio is None else r.net_ratio, "" if r.solve_ratio is None else r.solve_ratio])
    return buf.getvalue()


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _uint64(text: str) -> int:
    value = int(text)
    if not 0 <= value <= MASK64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _sizes(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lbcenter", description="Lower-bounded center clustering in R^d.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def io_flags(p, with_algo):
        p.add_argument("--input", default="-", help="point file (default: stdin)")
        p.add_argument("--lambda", dest="lam", type=int, required=True, help="lower bound on cluster size")
        p.add_argument("--output", default=None, help="result JSON path (default: stdout)")
        p.add_argument("--svg", default=None, help="also draw the clustering (d = 2 only)")
        p.add_argument("--seed", type=_uint64, default=0)
        if with_algo:
            p.add_argument("--epsilon", type=float, default=0.5)
            p.add_argument("--algo", choices=ALGORITHMS, default="wspd")

    io_flags(sub.add_parser("solve", help="approximate a clustering"), True)
    io_flags(sub.add_parser("oracle", help="exact optimum by brute force (small n)"), False)

    gen = sub.add_parser("gen", help="write a seeded random instance")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--d", type=int, default=2)
    gen.add_argument("--kind", choices=("uniform", "clusters"), default="uniform")
    gen.add_argument("--seed", type=_uint64, default=0)
    gen.add_argument("--output", default=None)

    b = sub.add_parser("bench", help="time compute_net and solve_wspd as n doubles")
    b.add_argument("--sizes", type=_sizes, default=[2**14, 2**15, 2**16, 2**17])
    b.add_argument("--reps", type=int, default=3)
    b.add_argument("--seed", type=_uint64, default=0)
    b.add_argument("--lambda", dest="lam", type=int, default=16)
    b.add_argument("--epsilon", type=float, default=0.5)
    b.add_argument("--output", default=None, help="CSV path (default: printed after the table)")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command in ("solve", "oracle"):
            config = RunConfig(
                input=args.input,
                lam=args.lam,
                epsilon=getattr(args, "epsilon", 0.5),
                algorithm=getattr(args, "algo", "oracle"),
                output=args.output,
                svg=args.svg,
                seed=args.seed,
            )
            return run(config)
        if args.command == "gen":
            _write(args.output, format_points(generate_instance(args.n, args.d, args.kind, args.seed)))
            return EXIT_OK
        if args.reps < 1 or not args.epsilon > 0 or args.lam < 1:
            raise UsageError("--reps and --lambda must be >= 1 and --epsilon positive")
        rows = bench(args.sizes, args.reps, args.seed, args.lam, args.epsilon)
        sys.stdout.write(bench_table(rows))
        if args.output:
            Path(args.output).write_text(bench_csv(rows))
        else:
            sys.stdout.write("\n" + bench_csv(rows))
        return EXIT_OK
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
