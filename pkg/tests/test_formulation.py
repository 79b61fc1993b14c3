import numpy as np
import pytest

from covlink.formulation import (O_KINDS, Pattern, PointTupleRule, constraint_stats, dump_rules,
                                 expand, gen_int12, gen_int37, gen_relaxed, rules_for)
from covlink.geometry import (ConvexRegion, Disk, IterConfig, Lens, Verdict, disk_oset_nonempty,
                              disks_nonempty, emptiness_margin)
from covlink.instance import Instance, build_edges, builtin_example, gen_random
from covlink.separation import solve_rho_classes

STRICT = IterConfig(delta=1e-10)


def _slot_regions(inst, slot, enlarged):
    """Regions where a facility serving ``slot`` may sit (or its r-neighbourhood)."""
    r = inst.link_radius
    if not enlarged:
        return [ConvexRegion.disk(inst.disk(i)) for i in slot]
    if len(slot) == 1:
        i = slot[0]
        return [ConvexRegion.disk(Disk(inst.points[i], inst.cover_radii[i] + r))]
    a, b = slot
    return [ConvexRegion.oset(inst.points[a], inst.cover_radii[a], inst.points[b],
                              inst.cover_radii[b], r)]


def premise_regions(inst, rule):
    """The intersection a rule declares empty, rebuilt from its slots."""
    s = rule.slots
    if rule.pattern is Pattern.SAME:
        return [ConvexRegion.disk(inst.disk(i)) for i in s[0]]
    if rule.pattern is Pattern.EDGE:
        return _slot_regions(inst, s[0], False) + _slot_regions(inst, s[1], True)
    if rule.pattern is Pattern.PAIR_CN:
        # the shared neighbour must be within r of both slots
        return _slot_regions(inst, s[0], True) + _slot_regions(inst, s[1], True)
    if rule.pattern is Pattern.STAR:
        return (_slot_regions(inst, s[0], False) + _slot_regions(inst, s[1], True)
                + _slot_regions(inst, s[2], True))
    return sum((_slot_regions(inst, x, True) for x in s), [])


def premise_empty(inst, rule):
    return emptiness_margin(premise_regions(inst, rule), STRICT).verdict is Verdict.EMPTY


def _random_instance(seed, n):
    rng = np.random.default_rng(seed)
    return gen_random(seed, n, "unit", float(rng.uniform(0.08, 0.3)), float(rng.uniform(0.05, 0.4)),
                      3)


class TestGenInt12:
    def test_examples(self):
        rules = gen_int12(Instance.create([(0, 0), (0.5, 0)], 1, 0.2, 0.1, 2))
        assert [(r.kind, r.points) for r in rules] == [("Int1", (0, 1))]
        rules = gen_int12(Instance.create([(0, 0), (1.8, 0), (0.9, 1.5)], 1, 1.0, 0.1, 2))
        assert [(r.kind, r.points) for r in rules] == [("Int2", (0, 1, 2))]
        assert gen_int12(Instance.create([(0.5, 0.5)] * 4, 1, 0.1, 0.1, 2)) == []

    def test_complete_and_sound(self):
        inst = gen_random(3, 12, "unit", 0.15)
        rules = gen_int12(inst)
        pairs = {r.points for r in rules if r.kind == "Int1"}
        for a in range(inst.n):
            for b in range(a + 1, inst.n):
                assert ((a, b) in pairs) == (not disks_nonempty([inst.disk(a), inst.disk(b)]))
        for r in rules:
            if r.kind == "Int2":
                assert not disks_nonempty([inst.disk(i) for i in r.points])


class TestGenInt37:
    def test_example2_int3(self):
        rules = gen_int37(builtin_example("example2"), build_edges("line", 3))
        assert PointTupleRule("Int3", Pattern.EDGE, ((3,), (0, 1)), 1.5) in rules

    def test_huge_r(self):
        inst = gen_random(1, 10, "unit", 0.1, 5.0, 3)
        assert gen_int37(inst, build_edges("complete", 3)) == []

    def test_line2_no_neighbourhood_families(self):
        inst = gen_random(2, 10, "unit", 0.1, 0.05, 2)
        kinds = {r.kind for r in gen_int37(inst, build_edges("line", 2))}
        assert kinds and kinds <= {"Int3", "Int4"}

    def test_soundness(self):
        for seed in range(100):
            inst = _random_instance(seed, 6 + seed % 10)
            st = build_edges("star", 4)
            for rule in gen_int37(inst, st):
                assert premise_empty(inst, rule), (seed, rule)

    def test_determinism(self):
        inst = gen_random(5, 12, "unit", 0.12, 0.15, 3)
        st = build_edges("cycle", 3)
        assert gen_int37(inst, st) == gen_int37(inst, st)
        assert dump_rules(gen_int37(inst, st)) == dump_rules(gen_int37(inst, st))

    def test_monotone_in_r(self):
        # every premise that is empty at a larger r is also empty at a smaller one
        for seed in range(15):
            base = gen_random(seed, 10, "unit", 0.12, 0.1, 3)
            rs = (0.05, 0.1, 0.2, 0.35)
            for lo, hi in zip(rs, rs[1:]):
                small = base.replace(link_radius=lo)
                for rule in gen_int37(base.replace(link_radius=hi), build_edges("star", 4)):
                    assert premise_empty(small, rule)

    def test_not_vacuous(self):
        inst = gen_random(8, 12, "unit", 0.12, 0.1, 4)
        st = build_edges("ringstar", 4)
        adj = st.adjacency0()
        for rule in gen_int37(inst, st) + gen_relaxed(inst, st):
            for c in expand(rule, st):
                facs = sorted({j - 1 for _, j in c.terms})
                linked = any(adj[a][b] for a in facs for b in facs)
                common = any(all(adj[m][f] for f in facs) for m in range(st.p))
                assert linked or common


class TestRelaxed:
    def test_examples(self):
        inst = Instance.create([(0, 0), (10, 0)], 1, 0.5, 1.0, 3)
        rules = gen_relaxed(inst, build_edges("line", 3))
        kinds = {(r.kind, r.points) for r in rules}
        assert ("Int3R", (0, 1)) in kinds and ("Int4R", (0, 1)) in kinds

    def test_soundness(self):
        for seed in range(60):
            inst = _random_instance(seed, 8)
            for rule in gen_relaxed(inst, build_edges("complete", 4)):
                assert premise_empty(inst, rule), (seed, rule)

    def test_int3r_implies_exact(self):
        # B_a misses B(a_b, R_b + r), so it misses every enlarged lens containing b
        checked = 0
        for seed in range(20):
            inst = _random_instance(seed, 10)
            for rule in gen_relaxed(inst, build_edges("line", 3)):
                if rule.kind != "Int3R":
                    continue
                a, b = rule.points
                for c in range(inst.n):
                    if c in (a, b) or inst.points[c] == inst.points[b]:
                        continue
                    if disks_nonempty([inst.disk(b), inst.disk(c)]):
                        lens = Lens.of(inst.disk(b), inst.disk(c))
                        assert not disk_oset_nonempty(inst.disk(a), lens, inst.link_radius)
                        checked += 1
        assert checked > 100


def _classes(choice, p):
    cls = [[] for _ in range(p)]
    for i, j in enumerate(choice):
        if j is not None:
            cls[j - 1].append(i)
    return cls


def _feasible(inst, st, choice):
    cls = _classes(choice, st.p)
    if any(len(c) > 1 and not disks_nonempty([inst.disk(i) for i in c]) for c in cls):
        return False
    return solve_rho_classes(inst, st, cls, check=False).rho <= 1e-6


def test_rules_never_cut_feasible_assignments():
    rng = np.random.default_rng(17)
    hits = 0
    for seed in range(12):
        inst = gen_random(seed, 7, "unit", 0.2, 0.15, 3)
        for kind in ("line", "star", "complete"):
            st = build_edges(kind, 3)
            cons = [c for strat in ("full", "inc2")
                    for rule in rules_for(strat, inst, st).rules for c in expand(rule, st)]
            for _ in range(150):
                choice = [None if x == 0 else int(x) for x in rng.integers(0, 4, inst.n)]
                if any(c.violated_by(choice) for c in cons):
                    hits += 1
                    assert not _feasible(inst, st, choice)
    assert hits > 100


class TestStats:
    def test_empty(self):
        s = constraint_stats([], build_edges("line", 3))
        assert s.by_kind == {} and s.expanded == 0 and s.o_share == 0

    def test_int1(self):
        rule = PointTupleRule("Int1", Pattern.SAME, ((0, 1),), 0.1)
        st = build_edges("complete", 6)
        assert constraint_stats([rule], st, 6).expanded == 6 == len(expand(rule, st))

    def test_int3_line(self):
        rule = PointTupleRule("Int3", Pattern.EDGE, ((3,), (0, 1)), 1.5)
        st = build_edges("line", 3)
        s = constraint_stats([rule], st)
        assert s.expanded == 4 == len(expand(rule, st)) and s.o_share == 1.0

    def test_multiplicity_matches_expansion(self):
        inst = gen_random(4, 12, "unit", 0.1, 0.1, 5)
        for kind in ("complete", "cycle", "line", "star", "ringstar"):
            st = build_edges(kind, 5)
            rules = rules_for("full", inst, st).rules + rules_for("inc2", inst, st).rules
            s = constraint_stats(rules, st)
            exp = [c for r in rules for c in expand(r, st)]
            assert s.expanded == len(exp)
            o = sum(1 for c in exp if c.kind in O_KINDS)
            assert s.o_share == pytest.approx(o / len(exp))

    def test_wrong_p(self):
        with pytest.raises(ValueError):
            constraint_stats([], build_edges("line", 3), 4)


def test_no_good_rhs():
    st = build_edges("line", 3)
    for rule in gen_int37(builtin_example("example2"), st):
        for c in expand(rule, st):
            assert c.rhs == len(c.terms) - 1


def test_dump_format():
    text = dump_rules([PointTupleRule("Int1", Pattern.SAME, ((0, 4),), 0.25)])
    assert text == "Int1 1,5 0.25\n"
    assert dump_rules([]) == ""
