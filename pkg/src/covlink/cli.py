"""Command-line front end: ``covlink solve|gen|bench``."""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from statistics import fmean

from . import kernels
from .engine import (STATUS_INFEASIBLE, STATUS_TIMELIMIT, STRATEGIES, SolveConfig, SolveResult,
                     solve)
from .instance import (BUILTIN_NAMES, GraphKind, Instance, build_edges, builtin_example,
                       fmt_float, gen_random, load_instance, parse_instance, serialize_instance)
from .svg import render

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_TIMELIMIT = 0, 1, 2, 3, 4
TIMING_KEYS = ("time_rules_s", "time_search_s", "time_sep_s", "wall_s")
GRAPHS = tuple(k.value for k in GraphKind)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# JSON with 17 significant digits


def _enc(v, indent, level, out):
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    sep = ", " if not indent else ","
    if v is None:
        out.append("null")
    elif v is True:
        out.append("true")
    elif v is False:
        out.append("false")
    elif isinstance(v, int):
        out.append(str(v))
    elif isinstance(v, float):
        if not math.isfinite(v):
            raise ValueError("non-finite number in JSON output")
        out.append(fmt_float(v))
    elif isinstance(v, str):
        out.append(json.dumps(v))
    elif isinstance(v, dict):
        if not v:
            out.append("{}")
            return
        out.append("{")
        for t, (k, x) in enumerate(v.items()):
            if t:
                out.append(sep)
            out.append(pad)
            _enc(str(k), indent, level + 1, out)
            out.append(": ")
            _enc(x, indent, level + 1, out)
        out.append(end + "}")
    elif isinstance(v, (list, tuple)):
        if not v:
            out.append("[]")
            return
        # short numeric rows stay on one line
        flat = indent and all(isinstance(x, (int, float)) or x is None for x in v)
        out.append("[")
        for t, x in enumerate(v):
            if t:
                out.append(", " if flat else sep)
            if not flat:
                out.append(pad)
            _enc(x, indent, level + 1, out)
        out.append("]" if flat else end + "]")
    else:
        raise TypeError(f"cannot encode {type(v).__name__}")


def dumps(obj, indent: int | None = 2) -> str:
    """JSON text with every float written to 17 significant digits."""
    out: list[str] = []
    _enc(obj, indent, 0, out)
    return "".join(out)


def result_record(inst: Instance, graph: str, cfg: SolveConfig, res: SolveResult) -> dict:
    st = res.stats
    pl = res.placement
    return {
        "status": res.status,
        "objective": res.objective,
        "best_bound": float(res.best_bound),
        "gap": float(res.gap),
        "assignment": list(res.assignment.choice) if res.assignment else None,
        "placement": [[c.x, c.y] for c in pl.coords] if pl else None,
        "rho": pl.rho if pl else None,
        "stats": {
            "nodes": st.get("nodes", 0),
            "lazy_cuts": st.get("lazy_cuts", 0),
            "rules_by_kind": dict(sorted(st.get("rules_by_kind", {}).items())),
            "expanded_constraints": st.get("expanded_constraints", 0),
            "o_share": float(st.get("o_share", 0.0)),
            "separation_calls": st.get("separation_calls", 0),
            "time_rules_s": float(st.get("time_rules_s", 0.0)),
            "time_search_s": float(st.get("time_search_s", 0.0)),
            "time_sep_s": float(st.get("time_sep_s", 0.0)),
        },
        "instance": inst.digest(),
        "graph": graph,
        "n": inst.n,
        "p": inst.p,
        "strategy": cfg.strategy,
        "require_nonempty": cfg.require_nonempty,
    }


def strip_timing(rec):
    """Copy of a record without wall-time fields."""
    if isinstance(rec, dict):
        return {k: strip_timing(v) for k, v in rec.items() if k not in TIMING_KEYS}
    return rec


# ---------------------------------------------------------------------------
# argument helpers


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("true", "1", "yes", "on"):
        return True
    if v in ("false", "0", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {s!r}")


def _positive(s: str) -> float:
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _list(conv):
    def parse(s: str):
        try:
            return [conv(t) for t in s.split(",") if t.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return parse


def _instance_from(args) -> Instance:
    if args.instance and args.builtin:
        raise UsageError("give either --instance or --builtin, not both")
    if args.instance:
        inst = load_instance(args.instance)
    elif args.builtin:
        inst = builtin_example(args.builtin)
    else:
        raise UsageError("one of --instance or --builtin is required")
    kw = {}
    if args.p is not None:
        kw["p"] = args.p
    if args.R is not None:
        kw["cover_radii"] = args.R
    if args.r is not None:
        kw["link_radius"] = args.r
    return inst.replace(**kw) if kw else inst


def _write(path, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# commands


def cmd_solve(args) -> int:
    inst = _instance_from(args)
    structure = build_edges(args.graph, inst.p)
    cfg = SolveConfig(strategy=args.strategy, time_limit=args.time_limit,
                      require_nonempty=args.require_nonempty, compact_layout=args.compact,
                      seed=args.seed)
    res = solve(inst, structure, cfg)
    rec = result_record(inst, structure.kind.value, cfg, res)
    _write(args.out, dumps(rec) + "\n")
    if args.svg:
        coords = [tuple(c) for c in rec["placement"]] if rec["placement"] else None
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(render(inst, structure, rec["assignment"], coords))
    if res.status == STATUS_INFEASIBLE:
        return EXIT_INFEASIBLE
    if res.status == STATUS_TIMELIMIT:
        return EXIT_TIMELIMIT
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be positive")
    if args.p < 1:
        raise UsageError("--p must be positive")
    inst = gen_random(args.seed, args.n, args.weights, args.R, args.r, args.p)
    text = serialize_instance(inst)
    if args.out in (None, "-"):
        sys.stdout.write(text)
        print(inst.digest(), file=sys.stderr)
    else:
        _write(args.out, text)
        print(inst.digest())
    return EXIT_OK


def _bench_sources(args):
    """(label, instance) pairs before the p/R/r grid is applied."""
    src = []
    if args.corpus:
        names = sorted(f for f in os.listdir(args.corpus)
                       if os.path.isfile(os.path.join(args.corpus, f)))
        for f in names:
            src.append((f, load_instance(os.path.join(args.corpus, f))))
    for b in args.builtin or []:
        src.append((b, builtin_example(b)))
    if args.gen_n:
        for n in args.gen_n:
            for s in range(args.seed, args.seed + args.seeds):
                src.append((f"gen-n{n}-s{s}", gen_random(s, n, args.weights, 0.1, 0.2, 1)))
    if not src:
        raise UsageError("bench needs --corpus, --builtin or --gen-n")
    return src


def bench_tasks(args):
    tasks = []
    for label, base in _bench_sources(args):
        for p in args.p or [base.p]:
            for R in args.R or [None]:
                for r in args.r or [None]:
                    kw = {"p": p}
                    if R is not None:
                        kw["cover_radii"] = R
                    if r is not None:
                        kw["link_radius"] = r
                    inst = base.replace(**kw)
                    for g in args.graph or list(GRAPHS):
                        for s in args.strategy or ["inc2"]:
                            tasks.append((label, serialize_instance(inst), g, s, R, r,
                                          args.time_limit, args.require_nonempty))
    return tasks


def run_task(task) -> dict:
    label, text, graph, strategy, R, r, time_limit, nonempty = task
    head = {"source": label, "graph": graph, "strategy": strategy, "R": R, "r": r}
    t0 = time.perf_counter()
    try:
        inst = parse_instance(text)
        head.update(n=inst.n, p=inst.p)
        structure = build_edges(graph, inst.p)
        cfg = SolveConfig(strategy=strategy, time_limit=time_limit, require_nonempty=nonempty)
        res = solve(inst, structure, cfg)
        rec = {**head, **result_record(inst, graph, cfg, res)}
        rec["error"] = None
    except Exception as exc:  # a failed run is recorded and the benchmark goes on
        rec = {**head, "status": "Error", "error": f"{type(exc).__name__}: {exc}"}
    rec["wall_s"] = time.perf_counter() - t0
    return rec


def summarize(records) -> list[dict]:
    """Averages per (structure, n, p) and strategy."""
    groups: dict = {}
    for rec in records:
        key = (rec["graph"], rec.get("n"), rec.get("p"), rec["strategy"])
        groups.setdefault(key, []).append(rec)
    rows = []
    for (g, n, p, s), recs in sorted(groups.items(), key=lambda kv: tuple(map(str, kv[0]))):
        ok = [x for x in recs if x.get("error") is None]
        rows.append({
            "graph": g, "n": n, "p": p, "strategy": s, "runs": len(recs),
            "failed": len(recs) - len(ok),
            "optimal": sum(1 for x in ok if x["status"] == "Optimal"),
            "mean_time_s": fmean(x["wall_s"] for x in ok) if ok else None,
            "mean_gap": fmean(x["gap"] for x in ok) if ok else None,
            "mean_lazy_cuts": fmean(x["stats"]["lazy_cuts"] for x in ok) if ok else None,
            "mean_expanded": fmean(x["stats"]["expanded_constraints"] for x in ok) if ok else None,
            "o_share": fmean(x["stats"]["o_share"] for x in ok) if ok else None,
        })
    return rows


def format_summary(rows) -> str:
    head = (f"{'graph':<9} {'n':>4} {'p':>3} {'strategy':<8} {'runs':>5} {'opt':>4} "
            f"{'time_s':>9} {'gap':>7} {'cuts':>9} {'expanded':>10} {'o_share':>8}")
    lines = [head]

    def f(v, spec):
        return format(v, spec) if v is not None else "-"

    for r in rows:
        lines.append(f"{r['graph']:<9} {str(r['n']):>4} {str(r['p']):>3} {r['strategy']:<8} "
                     f"{r['runs']:>5} {r['optimal']:>4} {f(r['mean_time_s'], '9.3f'):>9} "
                     f"{f(r['mean_gap'], '7.4f'):>7} {f(r['mean_lazy_cuts'], '9.1f'):>9} "
                     f"{f(r['mean_expanded'], '10.1f'):>10} {f(r['o_share'], '8.3f'):>8}")
    return "\n".join(lines) + "\n"


def cmd_bench(args) -> int:
    tasks = bench_tasks(args)
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w", encoding="utf-8")
    records = []
    try:
        def emit(rec):
            records.append(rec)
            out.write(dumps(rec, indent=None) + "\n")
            out.flush()

        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as ex:
                futs = [ex.submit(run_task, t) for t in tasks]
                for fut in as_completed(futs):
                    emit(fut.result())
        else:
            for t in tasks:
                emit(run_task(t))
    finally:
        if out is not sys.stdout:
            out.close()
    rows = summarize(records)
    table = format_summary(rows)
    if args.summary:
        _write(args.summary, dumps(rows) + "\n")
    sys.stderr.write(table)
    if records and all(r.get("error") for r in records):
        return EXIT_FAIL
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="covlink",
                                 description="Maximal covering with linked facilities.")
    ap.add_argument("--version", action="version",
                    version=f"covlink ({kernels.BACKEND} kernels)")
    sub = ap.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser("solve", help="solve one instance")
    sp.add_argument("--instance", help="instance file (text or JSON)")
    sp.add_argument("--builtin", choices=BUILTIN_NAMES)
    sp.add_argument("--graph", choices=GRAPHS, default="complete")
    sp.add_argument("--strategy", choices=STRATEGIES, default="inc2")
    sp.add_argument("--p", type=int)
    sp.add_argument("--R", type=float, help="uniform coverage radius")
    sp.add_argument("--r", type=float, help="link radius")
    sp.add_argument("--time-limit", type=_positive, default=600.0)
    sp.add_argument("--require-nonempty", type=_bool, default=True)
    sp.add_argument("--compact", action="store_true", help="minimize total link length")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", help="result JSON path (default stdout)")
    sp.add_argument("--svg", help="write a drawing of the solution")
    sp.set_defaults(func=cmd_solve)

    gp = sub.add_parser("gen", help="generate a random instance")
    gp.add_argument("--seed", type=int, default=0)
    gp.add_argument("--n", type=int, required=True)
    gp.add_argument("--p", type=int, default=2)
    gp.add_argument("--R", type=float, default=0.1)
    gp.add_argument("--r", type=float, default=0.2)
    gp.add_argument("--weights", choices=("unit", "uniform"), default="unit")
    gp.add_argument("--out", help="instance path (default stdout)")
    gp.set_defaults(func=cmd_gen)

    bp = sub.add_parser("bench", help="run a grid of solves, JSON lines out")
    bp.add_argument("--corpus", help="directory of instance files")
    bp.add_argument("--builtin", type=_list(str))
    bp.add_argument("--gen-n", type=_list(int), help="generate instances of these sizes")
    bp.add_argument("--seeds", type=int, default=5, help="generated instances per size")
    bp.add_argument("--seed", type=int, default=0, help="first generator seed")
    bp.add_argument("--weights", choices=("unit", "uniform"), default="unit")
    bp.add_argument("--graph", type=_list(str))
    bp.add_argument("--strategy", type=_list(str))
    bp.add_argument("--p", type=_list(int))
    bp.add_argument("--R", type=_list(float))
    bp.add_argument("--r", type=_list(float))
    bp.add_argument("--time-limit", type=_positive, default=600.0)
    bp.add_argument("--require-nonempty", type=_bool, default=True)
    bp.add_argument("--jobs", type=int, default=1)
    bp.add_argument("--out", help="JSON-lines path (default stdout)")
    bp.add_argument("--summary", help="write the summary rows as JSON")
    bp.set_defaults(func=cmd_bench)
    return ap


def _check_bench(args):
    for g in args.graph or []:
        if g not in GRAPHS:
            raise UsageError(f"unknown graph {g!r}")
    for s in args.strategy or []:
        if s not in STRATEGIES:
            raise UsageError(f"unknown strategy {s!r}")
    for b in args.builtin or []:
        if b not in BUILTIN_NAMES:
            raise UsageError(f"unknown builtin instance {b!r}")
    if args.jobs < 1:
        raise UsageError("--jobs must be positive")
    if args.seeds < 1:
        raise UsageError("--seeds must be positive")


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        if args.cmd == "bench":
            _check_bench(args)
        return args.func(args)
    except (UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
