"""The ten acceptance criteria, one test each, with pinned tolerances."""
from __future__ import annotations

import io
import json
import math
import subprocess
import sys
import time
from contextlib import redirect_stdout
from itertools import combinations

import numpy as np

from covlink.cli import dumps, main as cli_main, strip_timing, summarize
from covlink.engine import SolveConfig, solve
from covlink.geometry import (ConvexRegion, Disk, Lens, Point, RegionTable, Verdict,
                              disks_nonempty, distance_batch, dykstra_distance_batch)
from covlink.instance import (Instance, build_edges, builtin_example, compute_cip, gen_random,
                              solve_mclp_cip)
from covlink.oracle import OracleConfig, enumerate as oracle_enumerate
from covlink.separation import SepConfig, solve_rho_classes

# pinned tolerances and budgets
FEAS_TOL = 1e-6            # coverage and link re-verification
RHO_FEASIBLE = 1e-6        # constructed-feasible separation value
STRETCH_TOL = 1e-4         # rigid stretch versus closed form
BOUNDARY_BAND = 1e-6       # grid points this close to either boundary are skipped
AMBIGUOUS_MAX = 0.02       # share of Ambiguous Helly cases
GRAPHS = ("complete", "cycle", "line", "star", "ringstar", "matching")
STRATEGIES = ("full", "inc1", "inc2")


def _run_cli(argv):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = cli_main(argv)
    return code, buf.getvalue()


def _verify_placement(inst, structure, choice, coords, tol=FEAS_TOL):
    for i, j in enumerate(choice):
        if j is not None:
            x, y = coords[j - 1]
            if math.hypot(x - inst.points[i].x, y - inst.points[i].y) > inst.cover_radii[i] + tol:
                return False
    for j, k in structure.edges:
        a, b = coords[j - 1], coords[k - 1]
        if math.hypot(a[0] - b[0], a[1] - b[1]) > inst.link_radius + tol:
            return False
    return True


def test_criterion_1_example2_exact(acceptance_report):
    inst = builtin_example("example2")
    structure = build_edges("line", 3)
    problems = []
    times = []
    for s in STRATEGIES:
        t0 = time.perf_counter()
        code, out = _run_cli(["solve", "--builtin", "example2", "--graph", "line",
                              "--strategy", s])
        dt = time.perf_counter() - t0
        times.append(dt)
        rec = json.loads(out)
        if code != 0 or rec["status"] != "Optimal" or rec["objective"] != 5:
            problems.append(f"{s}: status {rec['status']} objective {rec['objective']}")
            continue
        if not _verify_placement(inst, structure, rec["assignment"], rec["placement"]):
            problems.append(f"{s}: placement fails re-verification")
        if dt >= 1.0:
            problems.append(f"{s}: {dt:.2f} s")
    acceptance_report(1, "Example 2 exactness", not problems,
                      "; ".join(problems) or f"max {max(times):.3f} s")


def _grid():
    for n in (6, 8, 10):
        for p in (2, 3):
            for R in (0.1, 0.25):
                for r in (0.2, 0.5):
                    for seed in range(40):
                        yield n, p, R, r, seed


def test_criterion_2_oracle_equivalence(acceptance_report):
    t0 = time.perf_counter()
    runs = 0
    mismatches = []
    infeasible = 0
    for n, p, R, r, seed in _grid():
        inst = gen_random(seed, n, "unit", R, r, p)
        for g in GRAPHS:
            if g == "matching" and p % 2:
                continue
            st = build_edges(g, p)
            ref = oracle_enumerate(inst, st, OracleConfig(max_optima=1)).objective
            infeasible += ref is None
            for s in STRATEGIES:
                res = solve(inst, st, SolveConfig(strategy=s))
                runs += 1
                got = res.objective if res.status == "Optimal" else None
                ok = (ref is None and res.status == "Infeasible") or (
                    ref is not None and res.status == "Optimal" and got == ref)
                if not ok:
                    mismatches.append((n, p, R, r, seed, g, s, ref, res.status, got))
    dt = time.perf_counter() - t0
    ok = not mismatches and dt < 600
    acceptance_report(2, "oracle equivalence", ok,
                      f"{runs} solves, {infeasible} infeasible references, "
                      f"{len(mismatches)} mismatches, {dt:.1f} s")


def test_criterion_3_example1_consistency(acceptance_report):
    inst = builtin_example("example1")
    problems = []
    summary = []
    for g in GRAPHS:
        st = build_edges(g, inst.p)
        t0 = time.perf_counter()
        objs = {}
        for s in STRATEGIES:
            res = solve(inst, st, SolveConfig(strategy=s))
            objs[s] = (res.status, res.objective)
            if res.status == "Optimal":
                coords = [(c.x, c.y) for c in res.placement.coords]
                if not _verify_placement(inst, st, res.assignment.choice, coords):
                    problems.append(f"{g}/{s}: placement fails re-verification")
        dt = time.perf_counter() - t0
        if len(set(objs.values())) != 1:
            problems.append(f"{g}: strategies disagree {objs}")
        if dt >= 60:
            problems.append(f"{g}: {dt:.1f} s")
        summary.append(f"{g}={objs['full'][1]:g}/{dt:.1f}s")
    acceptance_report(3, "Example 1 consistency", not problems,
                      "; ".join(problems) or ", ".join(summary))


def test_criterion_4_mclp_cip(acceptance_report):
    inst = builtin_example("example1")
    t0 = time.perf_counter()
    obj, chosen = solve_mclp_cip(inst)
    dt = time.perf_counter() - t0
    # independent exhaustive search over every p-subset of candidates
    cip = compute_cip(inst)
    masks = [sum(1 << i for i in cov) for cov in cip.coverage]
    best = 0
    for combo in combinations(masks, inst.p):
        m = 0
        for x in combo:
            m |= x
        best = max(best, bin(m).count("1"))
    ok = obj == 13 and best == 13 and dt < 30
    acceptance_report(4, "MCLP-CIP baseline", ok,
                      f"branch-and-bound {obj:g}, exhaustive {best}, {dt:.2f} s")


def _pairwise_disks(rng):
    while True:
        ds = [Disk(Point(*rng.random(2)), float(rng.uniform(0.2, 0.6))) for _ in range(3)]
        if disks_nonempty(ds):
            return ds


def test_criterion_5_minkowski_identity(acceptance_report):
    rng = np.random.default_rng(5)
    t0 = time.perf_counter()
    disagree = skipped = total = reruns = 0
    for _ in range(100):
        ds = _pairwise_disks(rng)
        for r in (0.05, 0.1, 0.3):
            xs = np.linspace(min(d.center.x - d.radius for d in ds) - r,
                             max(d.center.x + d.radius for d in ds) + r, 200)
            ys = np.linspace(min(d.center.y - d.radius for d in ds) - r,
                             max(d.center.y + d.radius for d in ds) + r, 200)
            X, Y = np.meshgrid(xs, ys)
            X, Y = X.ravel(), Y.ravel()
            # left side: distance to the triple intersection by Dykstra; points farther
            # than r from a single disk are certified outside without iterating
            single = np.max([np.maximum(np.hypot(X - d.center.x, Y - d.center.y) - d.radius, 0)
                             for d in ds], axis=0)
            left = single - r
            near = single <= r + BOUNDARY_BAND
            dist, conv = dykstra_distance_batch(ds, X[near], Y[near])
            if not conv.all():
                idx = np.flatnonzero(~conv)
                reruns += len(idx)
                d2, _ = dykstra_distance_batch(ds, X[near][idx], Y[near][idx],
                                               max_iter=2_000_000, tol=1e-12)
                dist[idx] = d2
            left[near] = dist - r
            # right side: within r of every pairwise lens
            right = np.max([distance_batch(ConvexRegion.lens(Lens.of(a, b)), X, Y)
                            for a, b in combinations(ds, 2)], axis=0) - r
            band = (np.abs(left) < BOUNDARY_BAND) | (np.abs(right) < BOUNDARY_BAND)
            skipped += int(band.sum())
            total += len(X)
            disagree += int(np.sum(((left <= 0) != (right <= 0)) & ~band))
    dt = time.perf_counter() - t0
    acceptance_report(5, "Minkowski pairwise identity", disagree == 0 and dt < 120,
                      f"{total} points, {disagree} disagreements, {skipped} in band, "
                      f"{reruns} long Dykstra reruns, {dt:.1f} s")


def _random_region(rng):
    c = rng.uniform(0.3, 0.7, 2)
    if rng.random() < 0.5:
        return ConvexRegion.disk(Disk(Point(*c), float(rng.uniform(0.1, 0.35))))
    R1, R2 = rng.uniform(0.1, 0.3, 2)
    d = rng.uniform(0, 0.9 * (R1 + R2))
    th = rng.uniform(0, 2 * np.pi)
    b = Point(c[0] + d * np.cos(th), c[1] + d * np.sin(th))
    return ConvexRegion.oset(Point(*c), float(R1), b, float(R2), float(rng.uniform(0.02, 0.15)))


def test_criterion_6_helly_triples(acceptance_report):
    rng = np.random.default_rng(11)
    agree = disagree = ambiguous = empty = 0
    for _ in range(200):
        k = int(rng.integers(4, 7))
        table = RegionTable([_random_region(rng) for _ in range(k)])
        direct = table.test(range(k)).verdict
        triples = [table.test(t).verdict for t in combinations(range(k), 3)]
        if direct is Verdict.AMBIGUOUS or Verdict.AMBIGUOUS in triples:
            ambiguous += 1
            continue
        via = Verdict.EMPTY if Verdict.EMPTY in triples else Verdict.NONEMPTY
        agree += via is direct
        disagree += via is not direct
        empty += direct is Verdict.EMPTY
    ok = disagree == 0 and ambiguous < AMBIGUOUS_MAX * 200
    acceptance_report(6, "Helly triple reduction", ok,
                      f"{agree} agree ({empty} empty), {disagree} disagree, "
                      f"{ambiguous} ambiguous")


def _constructed_feasible(rng):
    kind = ["complete", "cycle", "line", "star", "ringstar", "matching"][int(rng.integers(6))]
    p = int(rng.choice([2, 4])) if kind == "matching" else int(rng.integers(2, 6))
    st = build_edges(kind, p)
    r = float(rng.uniform(0.1, 0.4))
    centre = rng.random(2)
    # every facility within r/2 of one centre keeps all links within r
    ang = rng.uniform(0, 2 * np.pi, p)
    rad = (r / 2) * np.sqrt(rng.random(p))
    X = centre + np.c_[rad * np.cos(ang), rad * np.sin(ang)]
    R = float(rng.uniform(0.05, 0.2))
    pts = rng.uniform(centre - 0.4, centre + 0.4, (12, 2))
    inst = Instance.create(pts, 1.0, R, r, p)
    classes = [[] for _ in range(p)]
    for i, a in enumerate(pts):
        for j in range(p):
            if np.hypot(*(a - X[j])) <= R:
                classes[j].append(i)
                break
    return inst, st, classes


def test_criterion_7_separation(acceptance_report):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(200):
        inst, st, classes = _constructed_feasible(rng)
        worst = max(worst, solve_rho_classes(inst, st, classes).rho)
    stretch_err = 0.0
    for L in (2.0, 3.5, 10.0, 25.0):
        for r in (0.2, 1.0):
            inst = Instance.create([(0, 0), (L, 0)], 1.0, 0.5, r, 2)
            rho = solve_rho_classes(inst, build_edges("line", 2), [[0], [1]]).rho
            stretch_err = max(stretch_err, abs(rho - max(0.0, L - 1.0 - r)))
    base = Instance.create([(0, 0), (10, 0)], 1.0, 0.5, 1.0, 2)
    rho8 = solve_rho_classes(base, build_edges("line", 2), [[0], [1]]).rho
    ok = worst <= RHO_FEASIBLE and stretch_err <= STRETCH_TOL and abs(rho8 - 8) <= STRETCH_TOL
    acceptance_report(7, "separation soundness and completeness", ok,
                      f"max feasible rho {worst:.2e}, stretch error {stretch_err:.2e}, "
                      f"(0,0)/(10,0) rho {rho8:.9f}")


def _value(res):
    return res.objective if res.status == "Optimal" else -math.inf


def test_criterion_8_monotonicity(acceptance_report):
    violations = []
    for seed in range(20):
        base = gen_random(seed, 12, "unit", 0.1, 0.2, 3)
        for g in ("line", "star"):
            st = build_edges(g, 3)
            vals = [_value(solve(base.replace(link_radius=r), st, SolveConfig(strategy="inc2")))
                    for r in (0.1, 0.2, 0.3, 0.4, 0.5)]
            if any(a > b for a, b in zip(vals, vals[1:])):
                violations.append(f"seed {seed} {g} r: {vals}")
            vals = [_value(solve(base.replace(cover_radii=R), st, SolveConfig(strategy="inc2")))
                    for R in (0.05, 0.1, 0.15, 0.2)]
            if any(a > b for a, b in zip(vals, vals[1:])):
                violations.append(f"seed {seed} {g} R: {vals}")
    acceptance_report(8, "monotonicity in r and R", not violations,
                      "; ".join(violations) or "80 monotone sequences")


def test_criterion_9_constraint_share(acceptance_report, tmp_path):
    out = tmp_path / "runs.jsonl"
    summary = tmp_path / "summary.json"
    code = cli_main(["bench", "--gen-n", "20", "--seeds", "5", "--p", "6", "--graph",
                     "complete", "--R", "0.1", "--r", "0.2", "--strategy", "full",
                     "--out", str(out), "--summary", str(summary)])
    rows = json.loads(summary.read_text())
    records = [json.loads(line) for line in out.read_text().splitlines()]
    shares = [rec["stats"]["o_share"] for rec in records]
    ok = (code == 0 and len(rows) == 1 and len(records) == 5
          and rows[0]["o_share"] is not None and rows[0]["o_share"] > 0.5
          and summarize(records)[0]["o_share"] == rows[0]["o_share"])
    acceptance_report(9, "O-derived constraint share", ok,
                      f"summary o_share {rows[0]['o_share']:.3f}, per run "
                      + ", ".join(f"{s:.3f}" for s in shares))


def _solve_subprocess(args):
    proc = subprocess.run([sys.executable, "-m", "covlink", "solve", *args],
                          capture_output=True, text=True)
    return proc.returncode, proc.stdout


def test_criterion_10_determinism(acceptance_report, tmp_path):
    flag_sets = [
        ["--builtin", "example2", "--graph", "line", "--strategy", "inc2"],
        ["--builtin", "example1", "--graph", "ringstar", "--strategy", "full", "--compact"],
        ["--builtin", "example1", "--graph", "matching", "--strategy", "inc1"],
    ]
    small = tmp_path / "small.txt"
    assert cli_main(["gen", "--seed", "3", "--n", "8", "--p", "3", "--R", "0.25",
                     "--out", str(small)]) == 0
    flag_sets.append(["--instance", str(small), "--graph", "cycle", "--strategy", "oracle"])
    diffs = []
    for flags in flag_sets:
        outs = []
        for _ in range(2):
            code, text = _solve_subprocess(flags)
            if code != 0:
                diffs.append(f"{' '.join(flags)} exited {code}")
                break
            outs.append((code, dumps(strip_timing(json.loads(text))).encode()))
        if len(outs) == 2 and outs[0] != outs[1]:
            diffs.append(" ".join(flags))
    acceptance_report(10, "determinism of solve output", not diffs,
                      "; ".join(diffs) or f"{len(flag_sets)} flag sets repeated")
