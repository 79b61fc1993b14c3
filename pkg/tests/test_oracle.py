import numpy as np
import pytest

from covlink.engine import SolveConfig
from covlink import kernels
from covlink.instance import Instance, build_edges, builtin_example, gen_random
from covlink.oracle import OracleConfig, enumerate as oracle_enumerate, solve_with_oracle
from covlink.separation import classes_of


def test_example2():
    res = oracle_enumerate(builtin_example("example2"), build_edges("line", 3))
    assert res.objective == 5
    assert len(res.optima) == 1
    assert classes_of(res.optima[0], 3) == [[0, 1], [2], [3, 4]]


def test_example2_without_symmetry():
    res = oracle_enumerate(builtin_example("example2"), build_edges("line", 3),
                           OracleConfig(symmetry=False))
    # the line reversal gives the mirrored labelling of the same optimum
    assert res.objective == 5
    assert sorted(a.choice for a in res.optima) == [(1, 1, 2, 3, 3), (3, 3, 2, 1, 1)]


def test_single_point():
    inst = Instance.create([(0.2, 0.3)], [2.5], 0.1, 0.1, 1)
    assert oracle_enumerate(inst, build_edges("complete", 1)).objective == 2.5


def test_infeasible():
    inst = Instance.create([(0, 0), (10, 0)], 1, 0.5, 0.2, 2)
    res = oracle_enumerate(inst, build_edges("complete", 2))
    assert res.objective is None and res.optima == []
    assert solve_with_oracle(inst, build_edges("complete", 2), SolveConfig()).status == "Infeasible"


def test_guard():
    with pytest.raises(ValueError, match="instance too large for oracle"):
        oracle_enumerate(builtin_example("example1"), build_edges("line", 6))


def test_symmetry_modes_agree():
    for seed in range(20):
        inst = gen_random(seed, 6, "uniform", 0.2, 0.25, 3)
        st = build_edges(["complete", "cycle", "line", "star"][seed % 4], 3)
        a = oracle_enumerate(inst, st, OracleConfig(symmetry=True))
        b = oracle_enumerate(inst, st, OracleConfig(symmetry=False))
        assert a.objective == b.objective
        assert a.enumerated <= b.enumerated
        # every symmetric optimum is a relabelling of a reported one
        assert {x.choice for x in a.optima} <= {x.choice for x in b.optima}


def test_optima_are_feasible_and_optimal():
    for seed in range(10):
        inst = gen_random(seed, 6, "unit", 0.2, 0.2, 2)
        st = build_edges("line", 2)
        res = oracle_enumerate(inst, st, OracleConfig(symmetry=False))
        if res.objective is None:
            continue
        for choice in res.optima:
            assert sum(w for w, j in zip(inst.weights, choice.choice) if j is not None) == res.objective
            assert all(classes_of(choice, 2))


def test_helly_classes_confirmed_by_dykstra():
    for seed in range(15):
        inst = gen_random(seed, 7, "unit", 0.25, 0.3, 2)
        res = oracle_enumerate(inst, build_edges("line", 2), OracleConfig(symmetry=False))
        for choice in res.optima:
            for cl in classes_of(choice, 2):
                # Dykstra from the centroid lands in every disk of the class
                disks = [inst.disk(i) for i in cl]
                anchor = np.mean([inst.points[i] for i in cl], axis=0)
                cx = np.array([d.center.x for d in disks])
                cy = np.array([d.center.y for d in disks])
                rad = np.array([d.radius for d in disks])
                px, py, _ = kernels.dykstra_disks(cx, cy, rad, anchor[0], anchor[1], 200000, 1e-13)
                for d in disks:
                    assert np.hypot(px - d.center.x, py - d.center.y) <= d.radius + 1e-7


def test_max_optima():
    res = oracle_enumerate(builtin_example("example2"), build_edges("line", 3),
                           OracleConfig(symmetry=False, max_optima=1))
    assert res.objective == 5 and len(res.optima) == 1
