"""Exhaustive ground truth for small instances.

Every map from points to {unassigned, 1..p} is considered. Classes whose
coverage disks share no point are discarded by the pair and triple test
(Helly), and the remaining maps are checked by separation in order of
decreasing weight, so the first weight level with a feasible map is optimal.
Maps are grouped as set partitions labelled by facilities; with symmetry on,
labellings equal up to an automorphism of the link graph are tried once.
"""
from __future__ import annotations

import builtins
import time
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations

from .engine import (OBJ_TOL, STATUS_INFEASIBLE, STATUS_OPTIMAL, Assignment, SolveConfig,
                     SolveResult)
from .geometry import disk_pair_nonempty, disk_triple_nonempty
from .instance import GraphStructure, Instance
from .separation import SepConfig, recover_placement, solve_rho_classes

MAX_MAPS = 10 ** 7
MAX_GROUP = 50000

_enum = builtins.enumerate  # the public name below shadows it


@dataclass(frozen=True)
class OracleConfig:
    sep_tol: float = 1e-6
    require_nonempty: bool = True
    symmetry: bool = True
    max_optima: int | None = None


@dataclass
class OracleResult:
    objective: float | None
    optima: list = field(default_factory=list)
    enumerated: int = 0
    separation_calls: int = 0


def _partitions(inst: Instance, p: int):
    """Coverage-feasible set partitions into at most p blocks, plus unassigned points.

    Returns (weight, blocks) pairs; blocks are tuples of point indices in
    increasing order, listed by their smallest point.
    """
    n = inst.n
    pts, rad = inst.points, inst.cover_radii
    pair = [[disk_pair_nonempty(pts[a], rad[a], pts[b], rad[b]) for b in range(n)]
            for a in range(n)]
    triple: dict = {}

    def fits(block, i):
        for a in block:
            if not pair[a][i]:
                return False
        for x in range(len(block)):
            for y in range(x + 1, len(block)):
                key = (block[x], block[y], i)
                v = triple.get(key)
                if v is None:
                    v = disk_triple_nonempty(inst.disk(block[x]), inst.disk(block[y]),
                                             inst.disk(i))
                    triple[key] = v
                if not v:
                    return False
        return True

    out = []
    blocks: list[list[int]] = []

    def rec(i, w):
        if i == n:
            out.append((w, tuple(tuple(b) for b in blocks)))
            return
        for b in blocks:
            if fits(b, i):
                b.append(i)
                rec(i + 1, w + inst.weights[i])
                b.pop()
        if len(blocks) < p:
            blocks.append([i])
            rec(i + 1, w + inst.weights[i])
            blocks.pop()
        rec(i + 1, w)

    rec(0, 0.0)
    return out


@lru_cache(maxsize=64)
def _cached_partitions(inst: Instance, p: int):
    parts = _partitions(inst, p)
    # stable: generation order breaks ties
    return tuple(sorted(parts, key=lambda t: -t[0]))


def _automorphisms(structure: GraphStructure):
    p = structure.p
    adj = structure.adjacency0()
    deg = [sum(row) for row in adj]
    out: list[tuple] = []
    img = [-1] * p
    taken = [False] * p

    def rec(v):
        if len(out) > MAX_GROUP:
            return
        if v == p:
            out.append(tuple(img))
            return
        for w in range(p):
            if taken[w] or deg[w] != deg[v]:
                continue
            if all(adj[v][u] == adj[w][img[u]] for u in range(v)):
                img[v] = w
                taken[w] = True
                rec(v + 1)
                taken[w] = False
        img[v] = -1

    rec(0)
    return out if len(out) <= MAX_GROUP else None


@lru_cache(maxsize=256)
def _labellings(p: int, k: int, group):
    """Injective label tuples for k ordered blocks, one per automorphism orbit."""
    tuples = list(permutations(range(p), k))
    if group is None:
        return tuple(tuples)
    reps = []
    for t in tuples:
        if all(tuple(g[j] for j in t) >= t for g in group):
            reps.append(t)
    return tuple(reps)


def enumerate(inst: Instance, structure: GraphStructure, cfg: OracleConfig = OracleConfig()
              ) -> OracleResult:
    """Maximum weight over all feasible assignments, with the optimal assignments."""
    p, n = structure.p, inst.n
    if (p + 1) ** n > MAX_MAPS:
        raise ValueError("instance too large for oracle")
    group = None
    if cfg.symmetry:
        auts = _automorphisms(structure)
        group = tuple(auts) if auts else None
    sep = SepConfig(sep_tol=cfg.sep_tol)
    memo: dict = {}
    res = OracleResult(None)
    best = None
    for w, blocks in _cached_partitions(inst, p):
        if best is not None and w < best - OBJ_TOL:
            break
        k = len(blocks)
        if cfg.require_nonempty and k < p:
            continue
        for labels in _labellings(p, k, group):
            res.enumerated += 1
            classes = [[] for _ in range(p)]
            for b, j in zip(blocks, labels):
                classes[j] = list(b)
            key = tuple(tuple(c) for c in classes)
            rho = memo.get(key)
            if rho is None:
                rho = solve_rho_classes(inst, structure, classes, sep, decide_only=True,
                                        check=False).rho
                memo[key] = rho
                res.separation_calls += 1
            if rho > cfg.sep_tol:
                continue
            if best is None:
                best = w
                res.objective = w
            choice = [None] * n
            for j, c in _enum(classes):
                for i in c:
                    choice[i] = j + 1
            res.optima.append(Assignment(tuple(choice)))
            if cfg.max_optima is not None and len(res.optima) >= cfg.max_optima:
                return res
    return res


def solve_with_oracle(inst: Instance, structure: GraphStructure, cfg: SolveConfig) -> SolveResult:
    """Engine-shaped result from exhaustive enumeration."""
    t0 = time.perf_counter()
    res = enumerate(inst, structure, OracleConfig(sep_tol=cfg.sep_tol,
                                                  require_nonempty=cfg.require_nonempty,
                                                  symmetry=cfg.symmetry, max_optima=1))
    t_search = time.perf_counter() - t0
    stats = {"nodes": res.enumerated, "lazy_cuts": 0, "rules_by_kind": {},
             "expanded_constraints": 0, "o_share": 0.0, "time_rules_s": 0.0,
             "time_search_s": t_search, "time_sep_s": 0.0,
             "separation_calls": res.separation_calls}
    if res.objective is None:
        return SolveResult(STATUS_INFEASIBLE, None, None, None, 0.0, 0.0, stats)
    a = res.optima[0]
    t1 = time.perf_counter()
    sep = SepConfig(sep_tol=cfg.sep_tol)
    pl = solve_rho_classes(inst, structure, a.classes(structure.p), sep)
    pl = recover_placement(inst, structure, a, pl, cfg.compact_layout, sep)
    stats["time_sep_s"] = time.perf_counter() - t1
    obj = sum(inst.weights[i] for i, j in _enum(a.choice) if j is not None)
    return SolveResult(STATUS_OPTIMAL, obj, a, pl, obj, 0.0, stats)
