"""Command-line front end: experiment runners and report emission.

Subcommands: run, verify, adversary, hilbert, bounds, ftilde, cover.
Exit codes: 0 pass, 1 check failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from . import adversary, pebbles, search
from .oracles import all_inputs, from_target

# Desk-scale caps, overridable with --force.
CAPS = {
    "run": 64,
    "verify": 64,
    "adversary-search": 64,
    "adversary-comparison": 4,
    "hilbert": 4096,
    "cover": 64,
    "ftilde": 10**9,
}

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


@dataclass
class Report:
    """Pass/fail checks with measured values; JSON and table views agree."""

    command: str
    seed: Optional[int] = None
    checks: List[Dict[str, object]] = field(default_factory=list)
    elapsed_s: float = 0.0

    def add(self, name: str, passed: bool, value=None):
        self.checks.append({"name": name, "passed": bool(passed), "value": value})

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def to_json_dict(self) -> Dict[str, object]:
        return {
            "v": 1,
            "command": self.command,
            "seed": self.seed,
            "elapsed_s": self.elapsed_s,
            "checks": self.checks,
            "passed": self.passed,
        }

    @staticmethod
    def from_json_dict(doc: Dict[str, object]) -> "Report":
        r = Report(doc["command"], doc.get("seed"))
        r.elapsed_s = doc.get("elapsed_s", 0.0)
        r.checks = list(doc["checks"])
        return r

    def table(self) -> str:
        lines = [f"== {self.command} (seed={self.seed}, {self.elapsed_s:.2f}s) =="]
        for c in self.checks:
            mark = "pass" if c["passed"] else "FAIL"
            lines.append(f"  [{mark}] {c['name']}: {c['value']}")
        lines.append(f"  => {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def _emit(report: Report, out: Optional[str]) -> int:
    print(report.table())
    if out:
        with open(out, "w") as fh:
            json.dump(report.to_json_dict(), fh, indent=2)
    return EXIT_PASS if report.passed else EXIT_FAIL


def _cap_check(command: str, n: int, cap_key: str, force: bool) -> Optional[str]:
    cap = CAPS[cap_key]
    if n > cap and not force:
        return (
            f"{command}: n={n} exceeds the desk-scale cap {cap} "
            f"(pass --force to override)"
        )
    return None


# ---------------------------------------------------------------------------
# Subcommands.
# ---------------------------------------------------------------------------


def cmd_run(args) -> int:
    if not 0 <= args.target < args.n:
        print(f"run: target must lie in [0, {args.n}), got {args.target}", file=sys.stderr)
        return EXIT_USAGE
    msg = _cap_check("run", args.n, "run", args.force)
    if msg:
        print(msg, file=sys.stderr)
        return EXIT_USAGE
    x = from_target(args.n, args.target)
    outcome = search.run_search(x, record_trace=bool(args.trace))
    if args.trace:
        sha = search.plan_cover_hash(args.n)
        with open(args.trace, "w") as fh:
            fh.write(search.trace_to_jsonl(outcome, sha))
    print(f"found {outcome.answer}, queries {outcome.queries}")
    return EXIT_PASS if outcome.answer == args.target else EXIT_FAIL


def cmd_verify(args) -> int:
    msg = _cap_check("verify", args.n_max, "verify", args.force)
    if msg:
        print(msg, file=sys.stderr)
        return EXIT_USAGE
    t0 = time.perf_counter()
    report = Report("verify", args.seed)
    sizes = [n for n in range(2, args.n_max + 1, 2)]

    def check_size(n: int):
        expected = search.implemented_queries(n)
        results = []
        for x in all_inputs(n):
            out = search.run_search(x)
            results.append((x.f, out.answer, out.queries))
        ok = all(f == a and q == expected for f, a, q in results)
        return n, ok, expected

    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        for n, ok, expected in pool.map(check_size, sizes):
            report.add(f"exact search n={n} (all {n} inputs)", ok, f"queries={expected}")
    report.elapsed_s = time.perf_counter() - t0
    return _emit(report, args.out)


def cmd_adversary(args) -> int:
    comparison = args.problem in (adversary.SORT_TAG, adversary.ED_TAG)
    cap_key = "adversary-comparison" if comparison else "adversary-search"
    msg = _cap_check("adversary", args.n, cap_key, args.force)
    if msg:
        print(msg, file=sys.stderr)
        return EXIT_USAGE
    t0 = time.perf_counter()
    if comparison:
        trace = adversary.comparison_progress_trace(
            args.problem, args.n, steps=args.steps, seed=args.seed
        )
    else:
        trace = adversary.search_progress_trace(args.n)
    violations = trace.violations(args.tol)
    if trace.eps == 0.0:
        w0, wt = trace.w[0].real, abs(trace.w[-1])
        if wt > args.tol * max(1.0, w0):
            violations.append(f"exact algorithm left residual W_T = {wt:.3g}")

    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["step", "W", "delta", "bound"])
    for row in trace.csv_rows():
        writer.writerow(row)
    text = buf.getvalue()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        print(text, end="")

    report = Report("adversary", args.seed)
    report.add(f"{args.problem} n={args.n} progress bounds", not violations,
               violations or f"T={trace.queries}")
    report.elapsed_s = time.perf_counter() - t0
    print(report.table())
    return EXIT_PASS if not violations else EXIT_FAIL


def cmd_hilbert(args) -> int:
    msg = _cap_check("hilbert", args.n, "hilbert", args.force)
    if msg:
        print(msg, file=sys.stderr)
        return EXIT_USAGE
    t0 = time.perf_counter()
    report = Report("hilbert", args.seed)
    norm = adversary.spectral_norm(
        adversary.b_matrix(args.n), tol=args.tol, seed=args.seed
    )
    report.add(
        f"truncated Hilbert norm at n={args.n} stays below pi",
        norm <= math.pi + 1e-9,
        norm,
    )
    report.elapsed_s = time.perf_counter() - t0
    return _emit(report, args.out)


def cmd_bounds(args) -> int:
    try:
        bound = adversary.theorem_bound(args.problem, args.n, args.eps)
    except ValueError as exc:
        print(f"bounds: {exc}", file=sys.stderr)
        return EXIT_USAGE
    doc = bound.to_json_dict()
    doc["v"] = 1
    text = json.dumps(doc, indent=2)
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    return EXIT_PASS


def cmd_ftilde(args) -> int:
    msg = _cap_check("ftilde", args.n, "ftilde", args.force)
    if msg:
        print(msg, file=sys.stderr)
        return EXIT_USAGE
    t0 = time.perf_counter()
    value = search.f_tilde(args.n)
    log3 = search.ceil_log3(args.n)
    report = Report("ftilde", args.seed)
    report.add(
        f"recursion value at n={args.n} vs ceil(log3 n)={log3}",
        -1 <= value - log3 <= 2,
        value,
    )
    report.elapsed_s = time.perf_counter() - t0
    return _emit(report, args.out)


def cmd_cover(args) -> int:
    if args.n < 2 or args.n % 2:
        print(f"cover: need even n >= 2, got {args.n}", file=sys.stderr)
        return EXIT_USAGE
    msg = _cap_check("cover", args.n, "cover", args.force)
    if msg:
        print(msg, file=sys.stderr)
        return EXIT_USAGE
    t0 = time.perf_counter()
    params = pebbles.covering_params(args.n)
    tree = pebbles.build_tree(args.n)
    pt = pebbles.construct_covering(tree, params)
    cert = pebbles.covering_to_json(pt)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(cert)
    else:
        print(cert)
    rep = pebbles.validate_covering(pt)
    report = Report("cover", args.seed)
    report.add("condition A (one pebble of each color per path)", rep.cond_a, None)
    report.add("condition B (vertex counts dominate ancestors)", rep.cond_b, None)
    report.add("fair", rep.fair, rep.per_color)
    report.add("tight", rep.tight, None)
    worst = max(rep.per_color.values())
    report.add(
        f"budget: worst color count <= n'={params.n_prime}",
        worst <= params.n_prime,
        worst,
    )
    report.add(f"colors = 2^s = {params.n_colors}", pt.n_colors == params.n_colors, pt.n_colors)
    report.elapsed_s = time.perf_counter() - t0
    print(report.table())
    return EXIT_PASS if report.passed else EXIT_FAIL


# ---------------------------------------------------------------------------
# Parser.
# ---------------------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="querylab",
        description="Quantum query-model search simulator and bound verifier.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed_default=0):
        p.add_argument("--out", help="write the machine-readable report here")
        p.add_argument("--seed", type=int, default=seed_default)
        p.add_argument("--tol", type=float, default=1e-9)
        p.add_argument("--force", action="store_true", help="override desk-scale caps")

    p = sub.add_parser("run", help="search one input and print the result")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--target", type=int, required=True)
    p.add_argument("--trace", help="write a JSONL state trace here")
    common(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("verify", help="exhaustive exactness sweep over even sizes")
    p.add_argument("--n-max", type=int, default=64)
    p.add_argument("--workers", type=int, default=4)
    common(p)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("adversary", help="emit a progress trace and assert bounds")
    p.add_argument("--problem", choices=adversary.PROBLEM_TAGS, default="search")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--steps", type=int, default=4, help="comparison-model steps")
    common(p, seed_default=7)
    p.set_defaults(fn=cmd_adversary)

    p = sub.add_parser("hilbert", help="spectral norm of the truncated Hilbert matrix")
    p.add_argument("--n", type=int, required=True)
    common(p)
    p.set_defaults(fn=cmd_hilbert)
    # power iteration wants a tighter default than the report tolerance
    p.set_defaults(tol=1e-12)

    p = sub.add_parser("bounds", help="theorem-level lower-bound values")
    p.add_argument("--problem", choices=adversary.PROBLEM_TAGS, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.0)
    common(p)
    p.set_defaults(fn=cmd_bounds)

    p = sub.add_parser("ftilde", help="query-count recursion value")
    p.add_argument("--n", type=int, required=True)
    common(p)
    p.set_defaults(fn=cmd_ftilde)

    p = sub.add_parser("cover", help="construct, certify, and validate a covering")
    p.add_argument("--n", type=int, required=True)
    common(p)
    p.set_defaults(fn=cmd_cover)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (pebbles.CoveringError, pebbles.CapError, adversary.ConvergenceError,
            search.ExactnessError) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
