"""Command-line front end: solve, generate, verify, benchmark."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np

from .adversary import AdversaryError, default_bigM, solve_tildeZ
from .bench import FAMILIES, generate
from .dbc import DualProblemData, PartitionTree, dbc_solve, f2_oracle
from .drivers import ccg, ddbd, default_u0
from .model import TwoStageInstance, validate_instance
from .reference import ReferenceTooLarge, enumerate_vertices, exact_worst_case
from .report import RunReport, Termination
from .serialize import InstanceFormatError, load_instance, load_x, save_instance

ALGORITHMS = ("ccg", "ccg-exact", "ddbd", "dbc")
EXIT_CODES = {
    Termination.CONVERGED: 0,
    Termination.INFEASIBLE: 2,
    Termination.TIME_LIMIT: 3,
    Termination.ITER_LIMIT: 3,
    Termination.INCONCLUSIVE: 4,
}
REFERENCE_CAP = 100_000


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_size(text: str) -> tuple[int, ...]:
    try:
        parts = tuple(int(p) for p in text.replace("x", ",").split(",") if p)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size {text!r}; use e.g. 5 or 10x10") from None
    if not parts or min(parts) < 1:
        raise argparse.ArgumentTypeError(f"bad size {text!r}")
    return parts


def _parse_seeds(text: str) -> range:
    try:
        if ".." in text:
            a, b = text.split("..")
            return range(int(a), int(b) + 1)
        return range(int(text), int(text) + 1)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed range {text!r}; use A..B") from None


# ---------------------------------------------------------------------------
# shared operations


def solve_instance(inst: TwoStageInstance, algorithm: str, epsilon: float = 1e-3, time_limit: float = 1000.0,
                   iter_limit: int = 500, bigM_mult: float | None = None, seed: int = 0,
                   tree: PartitionTree | None = None) -> RunReport:
    bigM = None if bigM_mult is None else default_bigM(inst, bigM_mult)
    u0 = default_u0(inst.U, seed)
    kw = dict(time_limit=time_limit, iter_limit=iter_limit, bigM=bigM)
    if algorithm == "ccg":
        return ccg(inst, epsilon, u0, "tildeZ", **kw)
    if algorithm == "ccg-exact":
        return ccg(inst, epsilon, u0, "alpha-exact", **kw)
    if algorithm == "ddbd":
        return ddbd(inst, u0, epsilon=epsilon, tree=tree, **kw)
    if algorithm == "dbc":
        return dbc_solve(inst, epsilon, time_limit=time_limit, max_iter=iter_limit, tree=tree)[2]
    raise UsageError(f"unknown algorithm {algorithm!r}")


def verify_x(inst: TwoStageInstance, x) -> dict:
    """Robust feasibility of x, by vertex enumeration when small and by the exact oracle otherwise."""
    x = np.asarray(x, float)
    if x.shape != (inst.n,):
        raise UsageError(f"x has length {x.shape[0]}, expected {inst.n}")
    in_X = inst.X.contains(x, 1e-6)
    try:
        V = enumerate_vertices(inst.U, cap=REFERENCE_CAP)
        value, u = exact_worst_case(inst, x, V)
        feasible = value < math.inf
        return {"method": "reference", "feasible": bool(feasible and in_X), "in_X": in_X,
                "worst_case": value if feasible else "inf", "u": u.tolist()}
    except ReferenceTooLarge:
        pass
    try:
        u_tilde = solve_tildeZ(inst, x).u_star
    except AdversaryError:
        u_tilde = default_u0(inst.U)
    res = f2_oracle(inst, x, u_tilde)
    out = {"method": "dual-basis-cuts", "verdict": res.verdict, "in_X": in_X,
           "feasible": bool(res.verdict == "feasible" and in_X),
           "u": None if res.u_star is None else res.u_star.tolist()}
    if res.verdict == "feasible":
        out["upper_bound"] = res.value
    return out


@dataclass
class BenchmarkRow:
    instance: str
    algorithm: str
    feasible: bool | None
    terminated: bool
    termination: str
    wall_time: float
    gap: float
    value: float
    inner_iterations: int
    outer_iterations: int
    error: str = ""


BENCH_FIELDS = [f.name for f in fields(BenchmarkRow)]


def _bench_one(family, size, seed, algorithm, epsilon, time_limit) -> BenchmarkRow:
    name = f"{family}-{'x'.join(map(str, size))}-s{seed}"
    t0 = time.perf_counter()
    try:
        inst = generate(family, size, seed)
        rep = solve_instance(inst, algorithm, epsilon, time_limit)
        feasible = verify_x(inst, rep.x)["feasible"] if rep.x is not None else False
        return BenchmarkRow(name, algorithm, feasible, rep.termination is Termination.CONVERGED,
                            rep.termination.value, rep.wall_time, rep.gap, rep.value,
                            rep.inner_iterations, rep.outer_iterations)
    except Exception as e:  # recorded, never aborts the sweep
        return BenchmarkRow(name, algorithm, None, False, "Error", time.perf_counter() - t0,
                            math.nan, math.nan, 0, 0, f"{type(e).__name__}: {e}")


def run_benchmark(family: str, size, seeds, algorithms, epsilon: float = 1e-3, time_limit: float = 1000.0,
                  jobs: int = 1) -> str:
    """Aggregate CSV text, one row per (seed, algorithm), ordered by seed then algorithm."""
    tasks = [(family, size, s, a, epsilon, time_limit) for s in seeds for a in algorithms]
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            rows = list(ex.map(lambda t: _bench_one(*t), tasks))
    else:
        rows = [_bench_one(*t) for t in tasks]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(asdict(r))
    return buf.getvalue()


# ---------------------------------------------------------------------------
# commands


def _cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    problems = validate_instance(inst)
    if problems:
        raise UsageError("invalid instance: " + "; ".join(map(str, problems)))
    tree = PartitionTree(DualProblemData(inst)) if args.algorithm in ("ddbd", "dbc") else None
    rep = solve_instance(inst, args.algorithm, args.epsilon, args.time_limit, args.iter_limit,
                         args.big_m_mult, args.seed, tree)
    summary = {"algorithm": rep.algorithm, "termination": rep.termination.value,
               "value": rep.to_dict()["value"], "gap": rep.to_dict()["gap"],
               "x": None if rep.x is None else rep.x.tolist(),
               "inner_iterations": rep.inner_iterations, "outer_iterations": rep.outer_iterations,
               "wall_time": round(rep.wall_time, 4)}
    print(json.dumps(summary))
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(rep.to_dict(), fh, indent=1)
    if args.dump_tree:
        if tree is None:
            raise UsageError("--dump-tree needs --algorithm ddbd or dbc")
        with open(args.dump_tree, "w") as fh:
            fh.write(tree.dump())
    return EXIT_CODES[rep.termination]


def _cmd_generate(args) -> int:
    inst = generate(args.family, args.size, args.seed)
    save_instance(inst, args.out)
    print(json.dumps({"out": args.out, "name": inst.meta.get("name"), "n": inst.n, "m": inst.m,
                      "r": inst.r, "l": inst.l}))
    return 0


def _cmd_verify(args) -> int:
    inst = load_instance(args.instance)
    res = verify_x(inst, load_x(args.x))
    print(json.dumps(res))
    if res["feasible"]:
        return 0
    return 4 if res.get("verdict") == "inconclusive" else 2


def _cmd_benchmark(args) -> int:
    algs = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    bad = [a for a in algs if a not in ALGORITHMS]
    if bad:
        raise UsageError(f"unknown algorithms: {', '.join(bad)}")
    text = run_benchmark(args.family, args.size, args.seeds, algs, args.epsilon, args.time_limit, args.jobs)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="adaptro", description="Two-stage adaptive robust linear optimization.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve an instance file")
    s.add_argument("--algorithm", choices=ALGORITHMS, default="ddbd")
    s.add_argument("--instance", required=True)
    s.add_argument("--epsilon", type=float, default=1e-3)
    s.add_argument("--time-limit", type=float, default=1000.0)
    s.add_argument("--iter-limit", type=int, default=500)
    s.add_argument("--big-m-mult", type=float, default=None)
    s.add_argument("--seed", type=int, default=0, help="seed of the starting scenario")
    s.add_argument("--report")
    s.add_argument("--dump-tree")
    s.set_defaults(func=_cmd_solve)

    g = sub.add_parser("generate", help="write a seeded benchmark instance")
    g.add_argument("--family", choices=sorted(FAMILIES), required=True)
    g.add_argument("--size", type=_parse_size, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_generate)

    v = sub.add_parser("verify", help="check robust feasibility of a first-stage decision")
    v.add_argument("--instance", required=True)
    v.add_argument("--x", required=True)
    v.set_defaults(func=_cmd_verify)

    b = sub.add_parser("benchmark", help="sweep seeds and algorithms, write CSV")
    b.add_argument("--family", choices=sorted(FAMILIES), required=True)
    b.add_argument("--size", type=_parse_size, required=True)
    b.add_argument("--seeds", type=_parse_seeds, required=True)
    b.add_argument("--algorithms", default="ccg,ddbd")
    b.add_argument("--epsilon", type=float, default=1e-3)
    b.add_argument("--time-limit", type=float, default=1000.0)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out")
    b.set_defaults(func=_cmd_benchmark)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, InstanceFormatError, OSError, ValueError) as e:
        print(f"adaptro: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
