"""Incompatibility rules over demand-point tuples.

A rule records one geometric fact: a group of points cannot be served in a
given role pattern. The pattern says which slots share a facility and how
the facilities of different slots are linked:

``SAME``       every point at one facility
``EDGE``       slot A at j, slot B at k, with (j, k) an edge (both orientations)
``PAIR_CN``    slots A, B at distinct k1, k2 that share a neighbour j
``STAR``       slot C at j, slots A, B at distinct neighbours k1, k2 of j
``TRIPLE_CN``  slots A, B, C at distinct neighbours of one facility j

Link variables are constants of the structure, so every expanded
constraint is a no-good "sum of z <= (number of terms) - 1". Families whose
facility pattern cannot occur in a structure are not generated.
"""
from __future__ import annotations

import enum
import math
import time
from collections import Counter
from dataclasses import dataclass
from itertools import combinations, permutations
from typing import NamedTuple, Sequence

import numpy as np

from .geometry import (GEOM_TOL, ConvexRegion, Disk, IterConfig, Lens, RegionTable, Verdict,
                       disk_oset_nonempty, disk_pair_nonempty, disk_triple_nonempty,
                       distance)
from .instance import GraphStructure, Instance, fmt_float


class Pattern(enum.Enum):
    SAME = "same"
    EDGE = "edge"
    PAIR_CN = "pair_cn"
    STAR = "star"
    TRIPLE_CN = "triple_cn"


EXACT_KINDS = ("Int1", "Int2", "Int3", "Int4", "Int5", "Int6", "Int7")
RELAXED_KINDS = ("Int3R", "Int4R", "Int5R", "Int6R", "Int7R")
O_KINDS = frozenset(("Int3", "Int4", "Int5", "Int6", "Int7"))
ALL_KINDS = EXACT_KINDS + RELAXED_KINDS + ("LazyCut",)


class PointTupleRule(NamedTuple):
    kind: str
    pattern: Pattern
    slots: tuple[tuple[int, ...], ...]
    margin: float

    @property
    def points(self) -> tuple[int, ...]:
        return tuple(i for s in self.slots for i in s)


@dataclass(frozen=True)
class Constraint:
    """``sum of z[i, j] over terms <= rhs``; points 0-based, facilities 1-based."""

    terms: tuple[tuple[int, int], ...]
    rhs: int
    kind: str
    tuple: tuple[int, ...] = ()

    def violated_by(self, choice: Sequence) -> bool:
        return sum(1 for i, j in self.terms if choice[i] == j) > self.rhs


def _no_good(kind, pairs, tup) -> Constraint:
    terms = tuple(sorted(set(pairs)))
    return Constraint(terms, len(terms) - 1, kind, tup)


# ---------------------------------------------------------------------------
# structure-side quantities


def pattern_multiplicity(pattern: Pattern, structure: GraphStructure) -> int:
    degs = [structure.degree(j) for j in range(structure.p)]
    if pattern is Pattern.SAME:
        return structure.p
    if pattern is Pattern.EDGE:
        return 2 * len(structure.edges)
    if pattern in (Pattern.PAIR_CN, Pattern.STAR):
        return sum(d * (d - 1) for d in degs)
    return sum(d * (d - 1) * (d - 2) for d in degs)


def expand(rule: PointTupleRule, structure: GraphStructure) -> list[Constraint]:
    """Materialize every facility instantiation of a rule."""
    out = []
    tup = rule.points
    pr = rule.pattern
    sl = rule.slots
    if pr is Pattern.SAME:
        for j in range(1, structure.p + 1):
            out.append(_no_good(rule.kind, [(i, j) for i in sl[0]], tup))
        return out
    if pr is Pattern.EDGE:
        for j, k in structure.edges:
            for u, v in ((j, k), (k, j)):
                out.append(_no_good(rule.kind, [(i, u) for i in sl[0]] + [(i, v) for i in sl[1]],
                                    tup))
        return out
    for j in range(1, structure.p + 1):
        nb = sorted(structure.neighborhoods[j])
        if pr is Pattern.PAIR_CN:
            for k1, k2 in permutations(nb, 2):
                out.append(_no_good(rule.kind,
                                    [(i, k1) for i in sl[0]] + [(i, k2) for i in sl[1]], tup))
        elif pr is Pattern.STAR:
            for k1, k2 in permutations(nb, 2):
                out.append(_no_good(rule.kind, [(i, j) for i in sl[0]] + [(i, k1) for i in sl[1]]
                                    + [(i, k2) for i in sl[2]], tup))
        else:
            for k1, k2, k3 in permutations(nb, 3):
                out.append(_no_good(rule.kind, [(i, k1) for i in sl[0]] + [(i, k2) for i in sl[1]]
                                    + [(i, k3) for i in sl[2]], tup))
    return out


class ConstraintStats(NamedTuple):
    by_kind: dict
    expanded: int
    o_share: float


def constraint_stats(rules: Sequence[PointTupleRule], structure: GraphStructure,
                     p: int | None = None) -> ConstraintStats:
    if p is not None and p != structure.p:
        raise ValueError("structure built for a different p")
    by_kind = Counter(r.kind for r in rules)
    mult = {pt: pattern_multiplicity(pt, structure) for pt in Pattern}
    expanded = 0
    o_exp = 0
    for r in rules:
        m = mult[r.pattern]
        expanded += m
        if r.kind in O_KINDS:
            o_exp += m
    return ConstraintStats({k: by_kind[k] for k in ALL_KINDS if by_kind.get(k)}, expanded,
                           o_exp / expanded if expanded else 0.0)


def family_domains(structure: GraphStructure) -> tuple[bool, bool, bool]:
    """Which facility patterns exist: (an edge, a degree-2 vertex, a degree-3 vertex)."""
    dmax = max((structure.degree(j) for j in range(structure.p)), default=0)
    return dmax >= 1, dmax >= 2, dmax >= 3


# ---------------------------------------------------------------------------
# generators


def _pair_table(inst: Instance) -> np.ndarray:
    n = inst.n
    P = np.zeros((n, n), dtype=bool)
    for a in range(n):
        P[a, a] = True
        for b in range(a + 1, n):
            P[a, b] = P[b, a] = disk_pair_nonempty(inst.points[a], inst.cover_radii[a],
                                                   inst.points[b], inst.cover_radii[b])
    return P


def _gap(inst: Instance, a: int, b: int, extra: float) -> float:
    pa, pb = inst.points[a], inst.points[b]
    return math.hypot(pa.x - pb.x, pa.y - pb.y) - inst.cover_radii[a] - inst.cover_radii[b] - extra


def gen_int12(inst: Instance, cfg: IterConfig = IterConfig()) -> list[PointTupleRule]:
    n = inst.n
    P = _pair_table(inst)
    rules = []
    for a, b in combinations(range(n), 2):
        if not P[a, b]:
            rules.append(PointTupleRule("Int1", Pattern.SAME, ((a, b),), _gap(inst, a, b, 0.0)))
    trip = []
    for a, b, c in combinations(range(n), 3):
        if P[a, b] and P[a, c] and P[b, c]:
            if not disk_triple_nonempty(inst.disk(a), inst.disk(b), inst.disk(c)):
                trip.append((a, b, c))
    if trip:
        table = RegionTable([ConvexRegion.disk(inst.disk(i)) for i in range(n)])
        _, _, lbs = table.test_batch(trip, cfg)
        for t, lb in zip(trip, lbs):
            rules.append(PointTupleRule("Int2", Pattern.SAME, (t,), max(float(lb), 0.0)))
    return rules


class _OSets:
    """Disks ``B_i`` (region ids 0..n-1) and enlarged lenses ``O_o`` for nonempty pairs.

    ``O`` for a single point s is the disk of radius ``R_s + r``.
    """

    def __init__(self, inst: Instance, P: np.ndarray):
        n = inst.n
        r = inst.link_radius
        self.inst = inst
        self.table = RegionTable()
        for i in range(n):
            self.table.add_disks([inst.points[i]], [inst.cover_radii[i]])
        self.members: list[tuple[int, ...]] = []
        self.region: list[int] = []
        self.lens: list[Lens | None] = []
        for s in range(n):
            self.members.append((s,))
            self.region.append(self.table.add_disks([inst.points[s]], [inst.cover_radii[s]], r))
            self.lens.append(None)
        for s, t in combinations(range(n), 2):
            if P[s, t]:
                self.members.append((s, t))
                self.region.append(self.table.add_disks(
                    [inst.points[s], inst.points[t]], [inst.cover_radii[s], inst.cover_radii[t]], r))
                self.lens.append(Lens.of(inst.disk(s), inst.disk(t)))
        self.m = len(self.members)

    def diagonal(self, o: int) -> bool:
        return len(self.members[o]) == 1


def _batch(table: RegionTable, tuples, cfg):
    if not tuples:
        return np.empty(0, dtype=np.int64), np.empty(0)
    codes, _, lbs = table.test_batch(tuples, cfg)
    return codes, lbs


def gen_int37(inst: Instance, structure: GraphStructure,
              cfg: IterConfig = IterConfig()) -> list[PointTupleRule]:
    """Exact enlarged-lens families, skipping dominated and impossible ones."""
    has_edge, has_deg2, has_deg3 = family_domains(structure)
    if not has_edge:
        return []
    n = inst.n
    r = inst.link_radius
    P = _pair_table(inst)
    O = _OSets(inst, P)
    mem = O.members
    rules: list[PointTupleRule] = []

    # B_l against O_o, l outside o
    BO = np.ones((n, O.m), dtype=bool)
    for o in range(O.m):
        ms = mem[o]
        for l in range(n):
            if l in ms:
                continue
            if len(ms) == 1:
                s = ms[0]
                BO[l, o] = disk_pair_nonempty(inst.points[l], inst.cover_radii[l],
                                              inst.points[s], inst.cover_radii[s] + r)
            else:
                BO[l, o] = disk_oset_nonempty(inst.disk(l), O.lens[o], r)
            if not BO[l, o] and (len(ms) == 2 or l < ms[0]):
                if len(ms) == 1:
                    margin = _gap(inst, l, ms[0], r)
                else:
                    margin = (distance(ConvexRegion.lens(O.lens[o]), inst.points[l])
                              - inst.cover_radii[l] - r)
                rules.append(PointTupleRule("Int3", Pattern.EDGE, ((l,), ms), margin))

    # B_a, B_b against O_st with all four Int3 relations absent
    pairs = [o for o in range(O.m) if not O.diagonal(o)]
    cand = []
    for x in range(len(pairs)):
        a, b = mem[pairs[x]]
        for y in range(x + 1, len(pairs)):
            s, t = mem[pairs[y]]
            if len({a, b, s, t}) < 4:
                continue
            if BO[a, pairs[y]] and BO[b, pairs[y]] and BO[s, pairs[x]] and BO[t, pairs[x]]:
                cand.append((pairs[x], pairs[y]))
    codes, lbs = _batch(O.table, [(mem[u][0], mem[u][1], O.region[v]) for u, v in cand], cfg)
    for (u, v), c, lb in zip(cand, codes, lbs):
        if c == Verdict.EMPTY.value:
            rules.append(PointTupleRule("Int4", Pattern.EDGE, (mem[u], mem[v]), float(lb)))

    if not has_deg2:
        return rules

    # O_o1 against O_o2 (point-disjoint)
    OO = np.ones((O.m, O.m), dtype=bool)
    diag_empty = np.zeros((n, n), dtype=bool)
    for s, u in combinations(range(n), 2):
        if _gap(inst, s, u, 2 * r) > GEOM_TOL:
            diag_empty[s, u] = diag_empty[u, s] = True
    cand = []
    for o1, o2 in combinations(range(O.m), 2):
        m1, m2 = mem[o1], mem[o2]
        if set(m1) & set(m2):
            continue
        if any(diag_empty[s, u] for s in m1 for u in m2):
            OO[o1, o2] = OO[o2, o1] = False
            if len(m1) == 1 and len(m2) == 1:
                rules.append(PointTupleRule("Int5", Pattern.PAIR_CN, (m1, m2),
                                            _gap(inst, m1[0], m2[0], 2 * r)))
            continue
        if len(m1) == 1 and len(m2) == 1:
            continue
        if len(m1) == 1 or len(m2) == 1:
            d1, lens_o = (m1, O.lens[o2]) if len(m1) == 1 else (m2, O.lens[o1])
            if not disk_oset_nonempty(inst.disk(d1[0]), lens_o, 2 * r):
                OO[o1, o2] = OO[o2, o1] = False
                rules.append(PointTupleRule("Int5", Pattern.PAIR_CN, (m1, m2), 0.0))
            continue
        cand.append((o1, o2))
    codes, lbs = _batch(O.table, [(O.region[u], O.region[v]) for u, v in cand], cfg)
    for (u, v), c, lb in zip(cand, codes, lbs):
        if c == Verdict.EMPTY.value:
            OO[u, v] = OO[v, u] = False
            rules.append(PointTupleRule("Int5", Pattern.PAIR_CN, (mem[u], mem[v]), float(lb)))

    # B_l against O_o1, O_o2
    cand = []
    for o1, o2 in combinations(range(O.m), 2):
        if not OO[o1, o2]:
            continue
        m1, m2 = mem[o1], mem[o2]
        if set(m1) & set(m2):
            continue
        for l in range(n):
            if l in m1 or l in m2 or not BO[l, o1] or not BO[l, o2]:
                continue
            cand.append((l, o1, o2))
    cand = _drop_dominated_star(cand, inst, O, r)
    codes, lbs = _batch(O.table, [(l, O.region[u], O.region[v]) for l, u, v in cand], cfg)
    for (l, u, v), c, lb in zip(cand, codes, lbs):
        if c == Verdict.EMPTY.value:
            rules.append(PointTupleRule("Int6", Pattern.STAR, ((l,), mem[u], mem[v]), float(lb)))

    if not has_deg3:
        return rules

    cand = []
    for o1, o2, o3 in combinations(range(O.m), 3):
        if not (OO[o1, o2] and OO[o1, o3] and OO[o2, o3]):
            continue
        m1, m2, m3 = mem[o1], mem[o2], mem[o3]
        if len(set(m1) | set(m2) | set(m3)) < len(m1) + len(m2) + len(m3):
            continue
        cand.append((o1, o2, o3))
    cand = _drop_dominated_triple(cand, inst, O, r)
    codes, lbs = _batch(O.table, [tuple(O.region[o] for o in c) for c in cand], cfg)
    for c, code, lb in zip(cand, codes, lbs):
        if code == Verdict.EMPTY.value:
            rules.append(PointTupleRule("Int7", Pattern.TRIPLE_CN, tuple(mem[o] for o in c),
                                        float(lb)))
    return rules


def _enl(inst, s, r) -> Disk:
    return Disk(inst.points[s], inst.cover_radii[s] + r)


def _drop_dominated_star(cand, inst, O, r):
    """Drop (l; o1, o2) whose single-point sub-configuration is already empty."""
    cache = {}
    out = []
    for l, o1, o2 in cand:
        dominated = False
        if not (O.diagonal(o1) and O.diagonal(o2)):
            for s in O.members[o1]:
                for u in O.members[o2]:
                    key = (l, min(s, u), max(s, u))
                    if key not in cache:
                        cache[key] = not disk_triple_nonempty(inst.disk(l), _enl(inst, s, r),
                                                              _enl(inst, u, r))
                    if cache[key]:
                        dominated = True
                        break
                if dominated:
                    break
        if not dominated:
            out.append((l, o1, o2))
    return out


def _drop_dominated_triple(cand, inst, O, r):
    cache = {}
    out = []
    for c in cand:
        if all(O.diagonal(o) for o in c):
            out.append(c)
            continue
        dominated = False
        for s in O.members[c[0]]:
            for u in O.members[c[1]]:
                for v in O.members[c[2]]:
                    key = tuple(sorted((s, u, v)))
                    if key not in cache:
                        cache[key] = not disk_triple_nonempty(_enl(inst, s, r), _enl(inst, u, r),
                                                              _enl(inst, v, r))
                    if cache[key]:
                        dominated = True
                        break
                if dominated:
                    break
            if dominated:
                break
        if not dominated:
            out.append(c)
    return out


def gen_relaxed(inst: Instance, structure: GraphStructure) -> list[PointTupleRule]:
    """Families that replace enlarged lenses by disks of radius ``R + r``."""
    has_edge, has_deg2, has_deg3 = family_domains(structure)
    if not has_edge:
        return []
    n = inst.n
    r = inst.link_radius
    P = _pair_table(inst)
    rules = []
    e1 = np.zeros((n, n), dtype=bool)  # B_a vs B_b + r empty
    e2 = np.zeros((n, n), dtype=bool)  # B_a + r vs B_b + r empty
    for a, b in combinations(range(n), 2):
        g1 = _gap(inst, a, b, r)
        if g1 > GEOM_TOL:
            e1[a, b] = e1[b, a] = True
            rules.append(PointTupleRule("Int3R", Pattern.EDGE, ((a,), (b,)), g1))
        g2 = _gap(inst, a, b, 2 * r)
        if has_deg2 and g2 > GEOM_TOL:
            e2[a, b] = e2[b, a] = True
            rules.append(PointTupleRule("Int4R", Pattern.PAIR_CN, ((a,), (b,)), g2))
    B = [inst.disk(i) for i in range(n)]
    E = [_enl(inst, i, r) for i in range(n)]
    for a, b in combinations(range(n), 2):
        if not P[a, b]:
            continue
        for c in range(n):
            if c in (a, b) or e1[a, c] or e1[b, c]:
                continue
            if not disk_triple_nonempty(B[a], B[b], E[c]):
                rules.append(PointTupleRule("Int5R", Pattern.EDGE, ((a, b), (c,)), 0.0))
    if not has_deg2:
        return rules
    for a in range(n):
        for b, c in combinations(range(n), 2):
            if a in (b, c) or e1[a, b] or e1[a, c] or e2[b, c]:
                continue
            if not disk_triple_nonempty(B[a], E[b], E[c]):
                rules.append(PointTupleRule("Int6R", Pattern.STAR, ((a,), (b,), (c,)), 0.0))
    if not has_deg3:
        return rules
    for a, b, c in combinations(range(n), 3):
        if e2[a, b] or e2[a, c] or e2[b, c]:
            continue
        if not disk_triple_nonempty(E[a], E[b], E[c]):
            rules.append(PointTupleRule("Int7R", Pattern.TRIPLE_CN, ((a,), (b,), (c,)), 0.0))
    return rules


# ---------------------------------------------------------------------------
# strategy rule sets with a per-instance cache


class RuleSet(NamedTuple):
    rules: tuple[PointTupleRule, ...]
    seconds: float


_CACHE: dict = {}
_CACHE_MAX = 256


def rules_for(strategy: str, inst: Instance, structure: GraphStructure,
              cfg: IterConfig = IterConfig()) -> RuleSet:
    """Rule list for a strategy ("full", "inc1", "inc2"), cached per instance.

    Rules depend on the structure only through which facility patterns exist,
    so the cache key uses those flags rather than the edge list.
    """
    strategy = strategy.lower()
    dom = family_domains(structure)
    key = (strategy, inst, dom, cfg)
    hit = _CACHE.get(key)
    if hit is not None:
        return hit
    t0 = time.perf_counter()
    rules = list(gen_int12(inst, cfg))
    if strategy == "full":
        rules += gen_int37(inst, structure, cfg)
    elif strategy == "inc2":
        rules += gen_relaxed(inst, structure)
    elif strategy != "inc1":
        raise ValueError(f"unknown strategy {strategy!r}")
    rs = RuleSet(tuple(rules), time.perf_counter() - t0)
    if len(_CACHE) >= _CACHE_MAX:
        _CACHE.clear()
    _CACHE[key] = rs
    return rs


def dump_rules(rules: Sequence[PointTupleRule]) -> str:
    """One rule per line: ``KIND i1,i2[,i3...] premise_margin`` (1-based points)."""
    lines = []
    for r in rules:
        idx = ",".join(str(i + 1) for i in r.points)
        lines.append(f"{r.kind} {idx} {fmt_float(r.margin)}")
    return "\n".join(lines) + ("\n" if lines else "")
