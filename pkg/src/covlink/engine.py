"""Branch-and-bound over point-to-facility assignments.

Points are decided one at a time in order of decreasing weight; each takes
one of the facilities or stays unassigned (tried last). Rules are checked
when their last point in that order is decided, which turns every expanded
constraint into a set of forbidden facilities for that point. Leaves that
pass the rules go through separation; infeasible ones add a no-good cut to
the pool and the search continues.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

from .formulation import (Constraint, Pattern, PointTupleRule, constraint_stats, expand,
                          rules_for)
from .geometry import IterConfig
from .instance import GraphStructure, Instance
from .separation import (Placement, SepConfig, classes_of, make_lazy_cut, recover_placement,
                         solve_rho_classes)

OBJ_TOL = 1e-12

STATUS_OPTIMAL = "Optimal"
STATUS_INFEASIBLE = "Infeasible"
STATUS_TIMELIMIT = "TimeLimit"

STRATEGIES = ("full", "inc1", "inc2", "oracle")


@dataclass(frozen=True)
class Assignment:
    """``choice[i]`` is the 1-based facility serving point i, or None."""

    choice: tuple

    @property
    def p(self) -> int:
        return max((j for j in self.choice if j is not None), default=0)

    def classes(self, p: int) -> list[list[int]]:
        return classes_of(self.choice, p)


@dataclass(frozen=True)
class SolveConfig:
    strategy: str = "inc2"
    time_limit: float = 600.0
    require_nonempty: bool = True
    compact_layout: bool = False
    sep_tol: float = 1e-6
    delta: float = 1e-9
    seed: int = 0
    symmetry: bool = True
    strengthen_cuts: bool = True

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if not self.time_limit > 0:
            raise ValueError("time_limit must be positive")


@dataclass
class SolveResult:
    status: str
    objective: float | None
    assignment: Assignment | None
    placement: Placement | None
    best_bound: float
    gap: float
    stats: dict = field(default_factory=dict)


class _Timeout(Exception):
    pass


def _masks(structure: GraphStructure):
    p = structure.p
    adj = structure.adjacency0()
    adjm = [sum(1 << k for k in range(p) if adj[j][k]) for j in range(p)]
    cn2 = [0] * p
    for a in range(p):
        for b in range(p):
            if a != b and adjm[a] & adjm[b]:
                cn2[a] |= 1 << b
    cn3 = [[0] * p for _ in range(p)]
    for a in range(p):
        for b in range(p):
            if a == b:
                continue
            m = 0
            for c in range(p):
                if c not in (a, b) and adjm[a] & adjm[b] & adjm[c]:
                    m |= 1 << c
            cn3[a][b] = m
    return adjm, cn2, cn3


class _RuleIndex:
    """Rules grouped by the point decided last, with fast paths for pair rules."""

    def __init__(self, n: int, pos: Sequence[int]):
        self.pos = pos
        self.same2 = [[] for _ in range(n)]   # other point must not share the facility
        self.edge2 = [[] for _ in range(n)]   # other point must not sit at a neighbour
        self.cn2 = [[] for _ in range(n)]     # other point must not share a neighbour
        self.general = [[] for _ in range(n)]
        self.pair_cuts = [{} for _ in range(n)]  # other point -> its facility -> forbidden mask
        self.cuts = [[] for _ in range(n)]

    def add_rule(self, rule: PointTupleRule):
        pts = rule.points
        last = max(pts, key=lambda i: self.pos[i])
        sizes = tuple(len(s) for s in rule.slots)
        if rule.pattern is Pattern.SAME and sizes == (2,):
            other = pts[0] if pts[1] == last else pts[1]
            self.same2[last].append(other)
        elif rule.pattern is Pattern.EDGE and sizes == (1, 1):
            self.edge2[last].append(pts[0] if pts[1] == last else pts[1])
        elif rule.pattern is Pattern.PAIR_CN and sizes == (1, 1):
            self.cn2[last].append(pts[0] if pts[1] == last else pts[1])
        else:
            sl = next(t for t, s in enumerate(rule.slots) if last in s)
            slots = tuple(tuple(i for i in s if i != last) if t == sl else s
                          for t, s in enumerate(rule.slots))
            self.general[last].append((rule.pattern, sl, slots))

    def add_cut(self, cut: Constraint):
        last = max((i for i, _ in cut.terms), key=lambda i: self.pos[i])
        others = tuple((i, j - 1) for i, j in cut.terms if i != last)
        fac = next(j - 1 for i, j in cut.terms if i == last)
        if len(others) == 1:
            (i, j), = others
            d = self.pair_cuts[last].setdefault(i, {})
            d[j] = d.get(j, 0) | 1 << fac
        else:
            self.cuts[last].append((others, fac))
        return last


def _slot_fac(A, pts):
    """Common facility of the points, or -1 when any is unassigned or they differ."""
    f = A[pts[0]]
    if f < 0:
        return -1
    for i in pts[1:]:
        if A[i] != f:
            return -1
    return f


def _forbidden(L, A, idx: _RuleIndex, adjm, cn2m, cn3m, full_mask) -> int:
    bad = 0
    for o in idx.same2[L]:
        f = A[o]
        if f >= 0:
            bad |= 1 << f
    for o in idx.edge2[L]:
        f = A[o]
        if f >= 0:
            bad |= adjm[f]
    for o in idx.cn2[L]:
        f = A[o]
        if f >= 0:
            bad |= cn2m[f]
    if bad == full_mask:
        return bad
    for pattern, sl, slots in idx.general[L]:
        F = []
        ok = True
        for t, s in enumerate(slots):
            if t == sl and not s:
                F.append(-2)  # free: the deciding point's facility
                continue
            f = _slot_fac(A, s)
            if f < 0:
                ok = False
                break
            F.append(f)
        if not ok:
            continue
        fixed = F[sl] >= 0
        if pattern is Pattern.SAME:
            m = full_mask
        elif pattern is Pattern.EDGE:
            m = adjm[F[1 - sl]]
        elif pattern is Pattern.PAIR_CN:
            m = cn2m[F[1 - sl]]
        elif pattern is Pattern.STAR:
            c, a, b = F
            if sl == 0:
                m = adjm[a] & adjm[b] if a != b else 0
            else:
                other = b if sl == 1 else a
                m = (adjm[c] & ~(1 << other)) if adjm[c] >> other & 1 else 0
        else:
            others = [F[t] for t in range(3) if t != sl]
            m = cn3m[others[0]][others[1]] if others[0] != others[1] else 0
        if fixed:
            m &= 1 << F[sl]
        bad |= m
    for i, d in idx.pair_cuts[L].items():
        f = A[i]
        if f >= 0:
            bad |= d.get(f, 0)
    for others, fac in idx.cuts[L]:
        if not bad >> fac & 1 and all(A[i] == j for i, j in others):
            bad |= 1 << fac
    return bad


class _Search:
    def __init__(self, inst: Instance, structure: GraphStructure, rules, cfg: SolveConfig,
                 deadline: float):
        self.inst = inst
        self.st = structure
        self.cfg = cfg
        self.p = structure.p
        n = inst.n
        self.order = sorted(range(n), key=lambda i: (-inst.weights[i], i))
        self.pos = [0] * n
        for t, i in enumerate(self.order):
            self.pos[i] = t
        self.idx = _RuleIndex(n, self.pos)
        for r in rules:
            self.idx.add_rule(r)
        self.adjm, self.cn2m, self.cn3m = _masks(structure)
        self.full_mask = (1 << self.p) - 1
        w = inst.weights
        self.suffix = [0.0] * (n + 1)
        for t in range(n - 1, -1, -1):
            self.suffix[t] = self.suffix[t + 1] + w[self.order[t]]
        self.A = [-1] * n
        self.cnt = [0] * self.p
        self.best = -math.inf
        self.best_A = None
        self.nodes = 0
        self.cuts = 0
        self.sep_calls = 0
        self.sep_time = 0.0
        self.memo: dict = {}
        self.deadline = deadline
        self.sep_cfg = SepConfig(sep_tol=cfg.sep_tol)
        self.open_bound = -math.inf
        self.cut_at = [False] * n

    # separation -----------------------------------------------------------

    def _rho(self, classes) -> float:
        key = tuple(tuple(c) for c in classes)
        v = self.memo.get(key)
        if v is None:
            t0 = time.perf_counter()
            pl = solve_rho_classes(self.inst, self.st, classes, self.sep_cfg, decide_only=True,
                                   check=False)
            self.sep_time += time.perf_counter() - t0
            self.sep_calls += 1
            v = pl.rho
            self.memo[key] = v
        return v

    def _leaf(self, covered):
        classes = [[] for _ in range(self.p)]
        for i in self.order:
            f = self.A[i]
            if f >= 0:
                classes[f].append(i)
        for c in classes:
            c.sort()
        tol = self.cfg.sep_tol
        if self._rho(classes) <= tol:
            self.best = covered
            self.best_A = list(self.A)
            return
        choice = [None if f < 0 else f + 1 for f in self.A]
        if self.cfg.strengthen_cuts:
            # drop points greedily (lightest first) while separation still fails
            for i in reversed(self.order):
                f = self.A[i]
                if f < 0:
                    continue
                classes[f].remove(i)
                if self._rho(classes) <= tol:
                    classes[f].append(i)
                    classes[f].sort()
                else:
                    choice[i] = None
        last = self.idx.add_cut(make_lazy_cut(choice))
        self.cut_at[self.pos[last]] = True
        self.cuts += 1

    # search ---------------------------------------------------------------

    def run(self):
        self._dfs(0, 0.0, 0, ())

    def _dfs(self, t, covered, nonempty, used):
        self.nodes += 1
        if self.nodes & 255 == 0 and time.perf_counter() > self.deadline:
            raise _Timeout
        n = len(self.order)
        if t == n:
            if self.cfg.require_nonempty and nonempty < self.p:
                return
            if covered > self.best + OBJ_TOL:
                self._leaf(covered)
            return
        L = self.order[t]
        wL = self.inst.weights[L]
        rest = self.suffix[t + 1]
        A = self.A
        try:
            if covered + wL + rest > self.best + OBJ_TOL:
                bad = _forbidden(L, A, self.idx, self.adjm, self.cn2m, self.cn3m, self.full_mask)
                if bad != self.full_mask:
                    if self.cfg.symmetry:
                        cands = sorted(set(used) | set(self.st.new_label_choices(
                            tuple(sorted(used)))))
                    else:
                        cands = range(self.p)
                    for f in cands:
                        if bad >> f & 1:
                            continue
                        if covered + wL + rest <= self.best + OBJ_TOL:
                            break
                        new = self.cnt[f] == 0
                        ne = nonempty + new
                        if self.cfg.require_nonempty and self.p - ne > n - t - 1:
                            continue
                        A[L] = f
                        self.cnt[f] += 1
                        try:
                            self._dfs(t + 1, covered + wL, ne, used + (f,) if new else used)
                        finally:
                            self.cnt[f] -= 1
                            A[L] = -1
                        # cuts added below may forbid further siblings
                        if self.cut_at[t]:
                            self.cut_at[t] = False
                            bad |= _forbidden(L, A, self.idx, self.adjm, self.cn2m, self.cn3m,
                                              self.full_mask)
            if covered + rest > self.best + OBJ_TOL:
                if not (self.cfg.require_nonempty and self.p - nonempty > n - t - 1):
                    A[L] = -1
                    self._dfs(t + 1, covered, nonempty, used)
        except _Timeout:
            self.open_bound = max(self.open_bound, covered + wL + rest)
            raise


def _rules(strategy: str, inst: Instance, structure: GraphStructure, cfg: SolveConfig):
    return rules_for(strategy, inst, structure, IterConfig(delta=cfg.delta))


def solve(inst: Instance, structure: GraphStructure, cfg: SolveConfig = SolveConfig()
          ) -> SolveResult:
    """Maximum-weight feasible assignment and a witness placement."""
    if structure.p != inst.p:
        raise ValueError("structure built for a different p")
    if cfg.strategy == "oracle":
        from .oracle import solve_with_oracle
        return solve_with_oracle(inst, structure, cfg)
    t_start = time.perf_counter()
    rs = _rules(cfg.strategy, inst, structure, cfg)
    stats_c = constraint_stats(rs.rules, structure)
    t_rules = rs.seconds
    search = _Search(inst, structure, rs.rules, cfg, t_start + cfg.time_limit)
    t0 = time.perf_counter()
    timed_out = False
    try:
        search.run()
    except _Timeout:
        timed_out = True
    t_search = time.perf_counter() - t0 - search.sep_time
    total = sum(inst.weights)
    stats = {
        "nodes": search.nodes,
        "lazy_cuts": search.cuts,
        "rules_by_kind": dict(stats_c.by_kind),
        "expanded_constraints": stats_c.expanded,
        "o_share": stats_c.o_share,
        "time_rules_s": t_rules,
        "time_search_s": t_search,
        "time_sep_s": search.sep_time,
        "separation_calls": search.sep_calls,
    }
    if search.best_A is None:
        if timed_out:
            return SolveResult(STATUS_TIMELIMIT, None, None, None,
                               max(search.open_bound, 0.0), 1.0, stats)
        return SolveResult(STATUS_INFEASIBLE, None, None, None, 0.0, 0.0, stats)
    choice = tuple(None if f < 0 else f + 1 for f in search.best_A)
    assignment = Assignment(choice)
    t1 = time.perf_counter()
    classes = classes_of(choice, structure.p)
    pl = solve_rho_classes(inst, structure, classes, SepConfig(sep_tol=cfg.sep_tol))
    pl = recover_placement(inst, structure, assignment, pl, cfg.compact_layout,
                           SepConfig(sep_tol=cfg.sep_tol))
    stats["time_sep_s"] += time.perf_counter() - t1
    obj = sum(inst.weights[i] for i, j in enumerate(choice) if j is not None)
    if timed_out:
        bb = min(total, max(search.open_bound, obj))
        gap = (bb - obj) / bb if bb > 0 else 0.0
        return SolveResult(STATUS_TIMELIMIT, obj, assignment, pl, bb, gap, stats)
    return SolveResult(STATUS_OPTIMAL, obj, assignment, pl, obj, 0.0, stats)


# ---------------------------------------------------------------------------
# reference checks on explicit assignments


def propagate(inst: Instance, structure: GraphStructure, rules: Sequence[PointTupleRule],
              choice: Sequence, require_nonempty: bool = False, cuts: Sequence[Constraint] = ()):
    """Allowed choices for every undecided point, from the expanded constraints.

    ``choice[i]`` is a 1-based facility, None (unassigned) or ``...`` (undecided).
    A choice is removed when the other terms of some constraint already hold.
    Returns ``{i: set of allowed choices}`` or None when the node is dead.
    """
    p = structure.p
    cons = [c for r in rules for c in expand(r, structure)] + list(cuts)
    undecided = [i for i, j in enumerate(choice) if j is ...]
    dom = {i: set(range(1, p + 1)) | {None} for i in undecided}
    for c in cons:
        open_terms = [(i, j) for i, j in c.terms if choice[i] is ...]
        fixed_true = sum(1 for i, j in c.terms if choice[i] is not ... and choice[i] == j)
        if len(open_terms) == 1 and fixed_true == c.rhs:
            i, j = open_terms[0]
            dom[i].discard(j)
    if require_nonempty:
        used = {j for j in choice if j is not ... and j is not None}
        missing = p - len(used)
        if missing > len(undecided):
            return None
        if missing == len(undecided):
            for i in undecided:
                dom[i].discard(None)
                dom[i] -= used
                if not dom[i]:
                    return None
    return dom


def expanded_violation(assignment, rules: Sequence[PointTupleRule],
                       structure: GraphStructure) -> Constraint | None:
    """First constraint violated by a complete assignment, without expanding all rules."""
    choice = getattr(assignment, "choice", assignment)
    A = [-1 if j is None else j - 1 for j in choice]
    adjm, cn2m, cn3m = _masks(structure)
    for rule in rules:
        F = [_slot_fac(A, s) for s in rule.slots]
        if min(F) < 0:
            continue
        pt = rule.pattern
        fac = None
        if pt is Pattern.SAME:
            fac = [F[0]]
        elif pt is Pattern.EDGE:
            if adjm[F[0]] >> F[1] & 1:
                fac = F
        elif pt is Pattern.PAIR_CN:
            if F[0] != F[1] and cn2m[F[0]] >> F[1] & 1:
                fac = F
        elif pt is Pattern.STAR:
            c, a, b = F
            if a != b and adjm[c] >> a & 1 and adjm[c] >> b & 1:
                fac = F
        else:
            a, b, c = F
            if len({a, b, c}) == 3 and cn3m[a][b] >> c & 1:
                fac = F
        if fac is not None:
            terms = sorted((i, fac[t] + 1) for t, s in enumerate(rule.slots) for i in s)
            return Constraint(tuple(terms), len(terms) - 1, rule.kind, rule.points)
    return None
