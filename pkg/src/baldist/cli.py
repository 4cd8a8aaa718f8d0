"""Command-line front end for the balanced-districting toolkit.

Subcommands: ``gen`` (instance generators), ``solve`` (all solvers),
``verify`` (instance / districting validation), ``oracle`` (exact
brute-force references), ``separator`` (scattering separators),
``gap`` (rounding-gap experiments, CSV), and ``bench`` (small seeded
benchmark suites).

Conventions shared by every subcommand:

* ``--seed`` fully determines all randomized output, ``--threads`` only
  changes wall-clock time, never bytes.
* The primary artifact (instance, districting, fractional solution,
  separator, or report rows) goes to ``-o FILE`` when given, else to
  stdout.  A small stats block goes to stdout when the artifact went to a
  file, to stderr otherwise, and nowhere under ``--quiet``.
* Exit codes: 0 success, 1 infeasible parameters, 2 validation failure
  (including malformed input files).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from fractions import Fraction

from .core import (
    Districting,
    Instance,
    ParameterError,
    ValidationError,
    canonical_json,
    validate_districting,
)
from .exact import (
    brute_force_districting,
    brute_force_lp,
    brute_force_single_district_complete,
)
from .fptas import solve_complete, solve_tree
from .greedy import (
    binary_matching_bound,
    exact_rank_2,
    greedy_bounded_degree,
    greedy_rank_k,
    local_search_binary,
)
from .instances import (
    gen_greedy_counterexample,
    gen_grid_bipartite_gap,
    gen_random,
    gen_square_grid,
    gen_triangular_grid,
)
from .lp import solve_star_lp
from .rounding import gap_experiment, greedy_round_by_x, round_with_tau_scan
from .separators import (
    MinorCertificate,
    covey_separator,
    verify_minor_certificate,
    verify_scattering,
)

__all__ = ["main", "build_parser"]


# -- plumbing ----------------------------------------------------------------


def _parse_c(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParameterError(f"cannot parse --c value {text!r}: {exc}") from None


def _jsonable(value):
    if isinstance(value, Fraction):
        return float(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _rows_text(rows: list[dict], fieldnames: list[str], fmt: str) -> str:
    if fmt == "json":
        return canonical_json([_jsonable(r) for r in rows])
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _jsonable(row.get(k)) for k in fieldnames})
    return buf.getvalue()


def _deliver(args, artifact: str, stats: dict | None) -> None:
    """Write the artifact, then route the stats block (see module docstring)."""
    out = getattr(args, "output", None)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(artifact)
        stats_stream = sys.stdout
    else:
        sys.stdout.write(artifact)
        stats_stream = sys.stderr
    if stats is None or args.quiet:
        return
    fmt = args.fmt or "json"
    if fmt == "json":
        stats_stream.write(canonical_json(_jsonable(stats)))
    else:
        flat = {k: (json.dumps(_jsonable(v), sort_keys=True)
                    if isinstance(v, dict) else _jsonable(v))
                for k, v in stats.items()}
        stats_stream.write(_rows_text([flat], list(flat.keys()), "csv"))


def _load_instance(path: str) -> Instance:
    return Instance.load(path)


# -- gen ----------------------------------------------------------------------


def cmd_gen(args) -> int:
    c = _parse_c(args.c)
    family = args.family
    if family in ("square-grid", "triangular-grid", "bipartite-gap"):
        if args.side is None:
            raise ParameterError(f"--family {family} requires --side")
        builder = {"square-grid": gen_square_grid,
                   "triangular-grid": gen_triangular_grid,
                   "bipartite-gap": gen_grid_bipartite_gap}[family]
        instance = builder(args.side, c)
    elif family == "greedy-counterexample":
        if args.n is None:
            raise ParameterError("--family greedy-counterexample requires --n")
        if c.denominator != 1:
            raise ParameterError("--family greedy-counterexample requires an integer --c")
        instance = gen_greedy_counterexample(args.n, int(c))
    elif family == "random":
        if args.n is None:
            raise ParameterError("--family random requires --n")
        instance = gen_random(args.kind, args.n, args.max_weight,
                              seed=args.seed, c=c, p=args.p)
    else:  # pragma: no cover - argparse choices guard this
        raise ParameterError(f"unknown family {family!r}")
    stats = {"family": family, "n": instance.n, "edges": len(instance.edges),
             "c": str(instance.c), "seed": args.seed}
    _deliver(args, instance.dumps(), stats)
    return 0


# -- verify --------------------------------------------------------------------


def cmd_verify(args) -> int:
    instance_path = args.instance or args.path
    if instance_path is None:
        raise ParameterError("verify needs an instance (positional path or -i)")
    instance = _load_instance(instance_path)
    if args.districting is None:
        if not args.quiet:
            print(f"ok: instance with {instance.n} vertices, "
                  f"{len(instance.edges)} edges, c={instance.c}")
        return 0
    districting = Districting.load(args.districting)
    report = validate_districting(instance, districting,
                                  require_star=args.star,
                                  max_rank=args.max_rank)
    if not report.ok:
        print(report.summary(), file=sys.stderr)
        return 2
    if not args.quiet:
        print(f"ok: {len(districting.districts)} districts, "
              f"weight {districting.weight(instance)}")
    return 0


# -- solve --------------------------------------------------------------------

_LP_ALGOS = ("lp-star", "lp-star-round")
_EPSILON_ALGOS = ("fptas-complete", "fptas-tree") + _LP_ALGOS


def _need_epsilon(args) -> float:
    if args.epsilon is None:
        raise ParameterError(f"--algo {args.algo} requires --epsilon")
    return args.epsilon


def _solve_dispatch(args, instance: Instance):
    """Run the chosen solver; returns (districting, validate_kwargs, extras)."""
    algo = args.algo
    if algo == "fptas-complete":
        return solve_complete(instance, _need_epsilon(args)), {}, {}
    if algo == "fptas-tree":
        return solve_tree(instance, _need_epsilon(args)), {}, {}
    if algo in _LP_ALGOS:
        epsilon = _need_epsilon(args)
        fractional = solve_star_lp(instance, epsilon, threads=args.threads)
        extras = {"lp_value": fractional.lp_value, "fractional": fractional}
        if algo == "lp-star":
            rounded = greedy_round_by_x(instance, fractional)
        else:
            rounded, diagnostics = round_with_tau_scan(
                instance, fractional, epsilon, trials=args.trials,
                seed=args.seed, threads=args.threads)
            extras["tau"] = diagnostics.tau_used
        return rounded, {"require_star": True}, extras
    if algo == "greedy-rank":
        return greedy_rank_k(instance, args.k), {"max_rank": args.k}, {}
    if algo == "exact-rank2":
        return exact_rank_2(instance), {"max_rank": 2}, {}
    if algo == "greedy-degree":
        return greedy_bounded_degree(instance), {"require_star": True}, {}
    if algo == "local-search":
        return local_search_binary(instance), {"require_star": True}, {}
    if algo == "binary-matching":
        return binary_matching_bound(instance), {"require_star": True, "max_rank": 2}, {}
    raise ParameterError(f"unknown algorithm {algo!r}")  # pragma: no cover


def cmd_solve(args) -> int:
    if args.emit_fractional and args.algo not in _LP_ALGOS:
        raise ParameterError("--emit-fractional only applies to --algo lp-star/lp-star-round")
    instance = _load_instance(args.instance)
    start = time.perf_counter()
    districting, validate_kwargs, extras = _solve_dispatch(args, instance)
    runtime = time.perf_counter() - start

    report = validate_districting(instance, districting, **validate_kwargs)
    if not report.ok:
        print(report.summary(), file=sys.stderr)
        return 2
    fractional = extras.pop("fractional", None)
    if args.emit_fractional and fractional is not None:
        with open(args.emit_fractional, "w", encoding="utf-8") as fh:
            fh.write(fractional.dumps())
    stats = {"algo": args.algo, "n": instance.n,
             "weight": districting.weight(instance),
             "districts": len(districting.districts),
             "runtime_s": round(runtime, 6),
             "seed": args.seed, "threads": args.threads,
             "params": dict(districting.params)}
    stats.update(extras)
    _deliver(args, districting.dumps(instance), stats)
    return 0


# -- oracle --------------------------------------------------------------------


def cmd_oracle(args) -> int:
    instance = _load_instance(args.instance)
    start = time.perf_counter()
    if args.mode == "districting":
        districting = brute_force_districting(
            instance, require_star=args.star, max_rank=args.max_rank,
            cap=args.cap)
        artifact = districting.dumps(instance)
        stats = {"mode": args.mode, "n": instance.n,
                 "weight": districting.weight(instance),
                 "districts": len(districting.districts)}
    elif args.mode == "single-complete":
        weight, district = brute_force_single_district_complete(
            instance, cap=args.cap)
        districts = [district] if district is not None else []
        districting = Districting(districts, solver="oracle-single-complete",
                                  params={})
        artifact = districting.dumps(instance)
        stats = {"mode": args.mode, "n": instance.n, "weight": weight,
                 "districts": len(districts)}
    else:  # lp
        result = brute_force_lp(instance, max_rank=args.max_rank, cap=args.cap)
        primal = [{"district": sorted(members), "x": float(x)}
                  for members, x in sorted(result.x.items(),
                                           key=lambda kv: sorted(kv[0]))]
        doc = {"lp_value": float(result.value),
               "lp_value_exact": str(result.value),
               "primal": primal,
               "dual": {str(v): float(y) for v, y in sorted(result.y.items())}}
        artifact = canonical_json(doc)
        stats = {"mode": args.mode, "n": instance.n,
                 "lp_value": float(result.value),
                 "lp_value_exact": str(result.value)}
    stats["runtime_s"] = round(time.perf_counter() - start, 6)
    _deliver(args, artifact, stats)
    return 0


# -- separator -------------------------------------------------------------------


def cmd_separator(args) -> int:
    instance = _load_instance(args.instance)
    start = time.perf_counter()
    result = covey_separator(instance, args.h)
    runtime = time.perf_counter() - start
    if isinstance(result, MinorCertificate):
        doc = {"classes": [], "balance": None,
               "certificate": result.to_dict()}
        stats = {"h": args.h, "n": instance.n, "outcome": "minor-certificate",
                 "classes": 0, "runtime_s": round(runtime, 6)}
        if args.verify:
            report = verify_minor_certificate(instance, result)
            if not report.ok:
                print(report.summary(), file=sys.stderr)
                return 2
    else:
        doc = result.to_dict(instance)
        stats = {"h": args.h, "n": instance.n, "outcome": "separator",
                 "classes": len(result.classes), "balance": doc["balance"],
                 "runtime_s": round(runtime, 6)}
        if args.verify:
            report = verify_scattering(instance, result, threads=args.threads)
            if not report.ok:
                print(report.summary(), file=sys.stderr)
                return 2
    _deliver(args, canonical_json(doc), stats)
    return 0


# -- gap -------------------------------------------------------------------------

_GAP_FIELDS = ["side", "n", "sum_x", "correlation", "ratio"]


def cmd_gap(args) -> int:
    c = _parse_c(args.c)
    rows = gap_experiment(args.family, args.side, c=c)
    fmt = args.fmt or "csv"
    _deliver(args, _rows_text(rows, _GAP_FIELDS, fmt), None)
    return 0


# -- bench -----------------------------------------------------------------------

_BENCH_FIELDS = ["suite", "instance", "n", "algo", "weight", "districts",
                 "runtime_s", "seed", "threads"]


def _bench_jobs(suite: str, seed: int):
    """(instance label, instance, algo label, solver callable) quadruples.

    Every callable takes (instance, threads) so the harness stays uniform.
    """
    if suite == "quick":
        tree = gen_random("tree", 10, 8, seed=seed, c=3)
        gnp = gen_random("gnp", 10, 6, seed=seed + 1, c=3)
        return [
            ("tree-n10", tree, "fptas-tree",
             lambda inst, threads: solve_tree(inst, 0.3)),
            ("tree-n10", tree, "greedy-rank-2",
             lambda inst, threads: greedy_rank_k(inst, 2)),
            ("gnp-n10", gnp, "greedy-rank-3",
             lambda inst, threads: greedy_rank_k(inst, 3)),
            ("gnp-n10", gnp, "exact-rank2",
             lambda inst, threads: exact_rank_2(inst)),
        ]
    if suite == "grids":
        def tau_round(inst, threads):
            fractional = solve_star_lp(inst, 0.3, threads=threads)
            rounded, _ = round_with_tau_scan(inst, fractional, 0.3, trials=5,
                                             seed=seed, threads=threads)
            return rounded
        return [
            (f"square-{side}", gen_square_grid(side, 3), algo, fn)
            for side in (4, 5)
            for algo, fn in (
                ("greedy-degree", lambda inst, threads: greedy_bounded_degree(inst)),
                ("lp-star-round", tau_round))
        ]
    if suite == "greedy":
        jobs = []
        for offset in range(3):
            inst = gen_random("gnp", 12, 9, seed=seed + offset, c=3)
            jobs += [
                (f"gnp-12-{offset}", inst, "greedy-rank-2",
                 lambda i, t: greedy_rank_k(i, 2)),
                (f"gnp-12-{offset}", inst, "greedy-rank-3",
                 lambda i, t: greedy_rank_k(i, 3)),
                (f"gnp-12-{offset}", inst, "exact-rank2",
                 lambda i, t: exact_rank_2(i)),
                (f"gnp-12-{offset}", inst, "greedy-degree",
                 lambda i, t: greedy_bounded_degree(i)),
            ]
        return jobs
    raise ParameterError(f"unknown bench suite {suite!r}")


def cmd_bench(args) -> int:
    rows = []
    for label, instance, algo, fn in _bench_jobs(args.suite, args.seed):
        start = time.perf_counter()
        districting = fn(instance, args.threads)
        runtime = time.perf_counter() - start
        report = validate_districting(instance, districting)
        if not report.ok:  # pragma: no cover - solvers are validated elsewhere
            print(f"{label}/{algo}: {report.summary()}", file=sys.stderr)
            return 2
        rows.append({"suite": args.suite, "instance": label, "n": instance.n,
                     "algo": algo, "weight": districting.weight(instance),
                     "districts": len(districting.districts),
                     "runtime_s": round(runtime, 6),
                     "seed": args.seed, "threads": args.threads})
    fmt = args.fmt or "csv"
    _deliver(args, _rows_text(rows, _BENCH_FIELDS, fmt), None)
    return 0


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0,
                        help="seed for all randomized behavior (default 0)")
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads; never changes output bytes")
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="fmt", action="store_const", const="json",
                     help="emit stats/report rows as JSON")
    fmt.add_argument("--csv", dest="fmt", action="store_const", const="csv",
                     help="emit stats/report rows as CSV")
    common.add_argument("--quiet", action="store_true",
                        help="suppress the stats block")
    common.set_defaults(fmt=None)

    parser = argparse.ArgumentParser(
        prog="baldist",
        description="Balanced-districting solvers, oracles, and experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common],
                       help="generate an instance JSON file")
    p.add_argument("--family", required=True,
                   choices=["square-grid", "triangular-grid", "bipartite-gap",
                            "greedy-counterexample", "random"])
    p.add_argument("--side", type=int, help="grid side (grid families)")
    p.add_argument("--n", type=int, help="vertex count (random / counterexample)")
    p.add_argument("--c", default="3", help="balance parameter, e.g. 3 or 7/2")
    p.add_argument("--kind", default="gnp",
                   choices=["tree", "complete", "grid_subgraph", "gnp"],
                   help="random family kind")
    p.add_argument("--max-weight", type=int, default=8,
                   help="random weights drawn from [0, max-weight]")
    p.add_argument("--p", type=float, default=None,
                   help="edge probability for --kind gnp")
    p.add_argument("-o", "--output", help="write the instance here")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("verify", parents=[common],
                       help="validate an instance, or a districting against one")
    p.add_argument("path", nargs="?", help="instance file (positional form)")
    p.add_argument("-i", "--instance", help="instance file")
    p.add_argument("-d", "--districting", help="districting file to check")
    p.add_argument("--star", action="store_true",
                   help="require every district to be a star")
    p.add_argument("--max-rank", type=int, default=None,
                   help="cap the allowed district size")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("solve", parents=[common],
                       help="run a solver and emit the districting JSON")
    p.add_argument("--algo", required=True,
                   choices=["fptas-complete", "fptas-tree", "lp-star",
                            "lp-star-round", "greedy-rank", "exact-rank2",
                            "greedy-degree", "local-search", "binary-matching"])
    p.add_argument("-i", "--instance", required=True, help="instance file")
    p.add_argument("-o", "--output", help="write the districting here")
    p.add_argument("--epsilon", type=float, default=None,
                   help="accuracy parameter (fptas-* and lp-* algorithms)")
    p.add_argument("--k", type=int, default=2,
                   help="rank cap for --algo greedy-rank (default 2)")
    p.add_argument("--trials", type=int, default=20,
                   help="draws per tau for --algo lp-star-round (default 20)")
    p.add_argument("--emit-fractional", metavar="FILE",
                   help="also write the fractional LP solution (lp-* only)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", parents=[common],
                       help="exact brute-force reference solvers")
    p.add_argument("-i", "--instance", required=True, help="instance file")
    p.add_argument("-o", "--output", help="write the result here")
    p.add_argument("--mode", default="districting",
                   choices=["districting", "single-complete", "lp"])
    p.add_argument("--star", action="store_true",
                   help="restrict the districting oracle to star districts")
    p.add_argument("--max-rank", type=int, default=None,
                   help="cap the allowed district size")
    p.add_argument("--cap", type=int, default=None,
                   help="override the size cap (also: BD_ORACLE_CAP)")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("separator", parents=[common],
                       help="scattering separator / clique-minor certificate")
    p.add_argument("-i", "--instance", required=True, help="instance file")
    p.add_argument("-o", "--output", help="write the separator JSON here")
    p.add_argument("--h", type=int, required=True, dest="h",
                   help="clique-minor order to exclude")
    p.add_argument("--verify", action="store_true",
                   help="re-check the result before emitting it")
    p.set_defaults(func=cmd_separator)

    p = sub.add_parser("gap", parents=[common],
                       help="rounding-gap experiment rows (CSV by default)")
    p.add_argument("--family", required=True,
                   choices=["square", "triangular", "bipartite"])
    p.add_argument("--side", type=int, action="append", required=True,
                   help="grid side; repeat for several rows")
    p.add_argument("--c", default="3", help="balance parameter")
    p.add_argument("-o", "--output", help="write the rows here")
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("bench", parents=[common],
                       help="seeded benchmark suite (CSV by default)")
    p.add_argument("--suite", default="quick",
                   choices=["quick", "grids", "greedy"])
    p.add_argument("-o", "--output", help="write the rows here")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
