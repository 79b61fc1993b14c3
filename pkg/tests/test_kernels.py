import json
import os
import subprocess
import sys

import numpy as np
import pytest

from covlink import kernels

pytestmark = pytest.mark.skipif(not kernels.compiled_available(),
                                reason="compiled kernels are not built")
TOL = 1e-9


@pytest.fixture(scope="module")
def backends():
    return kernels.get_backend("compiled"), kernels.get_backend("pure")


def _table(rng, m):
    cx, cy = rng.random(2 * m), rng.random(2 * m)
    rad = rng.uniform(0.2, 0.45, 2 * m)
    # every other region is a plain disk: give it one disk only
    off = np.r_[0, np.cumsum([1 if k % 2 else 2 for k in range(m)])].astype(np.int64)
    n = int(off[-1])
    return cx[:n], cy[:n], rad[:n], off, rng.uniform(0, 0.15, m)


def test_circle_and_projection(backends):
    c, p = backends
    rng = np.random.default_rng(0)
    for _ in range(200):
        a = rng.uniform(-1, 1, 6)
        a[2], a[5] = abs(a[2]) + 0.1, abs(a[5]) + 0.1
        assert np.allclose(sorted(c.circle_points(*a)), sorted(p.circle_points(*a)), atol=TOL)
        cx, cy, rad = rng.random(2), rng.random(2), rng.uniform(0.4, 0.8, 2)
        x, y = rng.uniform(-2, 3, 2)
        assert np.allclose(c.project_disks(cx, cy, rad, x, y)[:2],
                           p.project_disks(cx, cy, rad, x, y)[:2], atol=TOL)


def test_dykstra(backends):
    c, p = backends
    rng = np.random.default_rng(1)
    cx, cy, rad = rng.random(3), rng.random(3), np.full(3, 0.6)
    xs, ys = rng.uniform(-1, 2, 50), rng.uniform(-1, 2, 50)
    dc, ic = c.dykstra_distance_batch(cx, cy, rad, xs, ys, 10000, 1e-10)
    dp, ip = p.dykstra_distance_batch(cx, cy, rad, xs, ys, 10000, 1e-10)
    assert np.allclose(dc, dp, atol=1e-8) and np.array_equal(ic, ip)


def test_region_distance(backends):
    c, p = backends
    rng = np.random.default_rng(2)
    cx, cy, rad, off, mg = _table(rng, 20)
    xs, ys = rng.uniform(-1, 2, 100), rng.uniform(-1, 2, 100)
    for k in range(20):
        assert np.allclose(c.region_distance_batch(cx, cy, rad, off, mg, k, xs, ys),
                           p.region_distance_batch(cx, cy, rad, off, mg, k, xs, ys), atol=TOL)


def test_emptiness(backends):
    c, p = backends
    rng = np.random.default_rng(3)
    cx, cy, rad, off, mg = _table(rng, 30)
    tuples = np.array([rng.choice(30, 3, replace=False) for _ in range(100)], dtype=np.int64)
    vc, fc, lc = c.emptiness_batch(cx, cy, rad, off, mg, tuples, 1e-9, 20000)
    vp, fp, lp = p.emptiness_batch(cx, cy, rad, off, mg, tuples, 1e-9, 20000)
    assert np.array_equal(np.asarray(vc), np.asarray(vp))
    assert np.allclose(fc, fp, atol=1e-7)


def test_rho(backends):
    c, p = backends
    pts = np.array([[0.0, 0.0], [0.1, 0.05], [0.5, 0.0], [0.55, 0.1], [1.0, 0.0], [1.05, 0.05]])
    args = (pts[:, 0].copy(), pts[:, 1].copy(), np.full(6, 0.12),
            np.array([0, 2, 4, 6], dtype=np.int64), (0.5, 0.03, 0.7),
            np.array([0, 1], dtype=np.int64), np.array([1, 2], dtype=np.int64))
    x0 = np.array([0.05, 0.02, 0.52, 0.05, 1.02, 0.02])
    for r in (0.1, 0.2, 0.3):
        rc = c.rho_solve(*args, r, x0, 1e-6, False, 100000)[1]
        rp = p.rho_solve(*args, r, x0, 1e-6, False, 100000)[1]
        assert rc == pytest.approx(rp, abs=1e-8)


def test_pure_backend_end_to_end():
    env = dict(os.environ, COVLINK_PURE="1")
    code = ("import json, covlink.kernels as k; from covlink.cli import main; "
            "print(k.BACKEND); main(['solve', '--builtin', 'example2', '--graph', 'line'])")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout
    backend, rest = out.split("\n", 1)
    assert backend == "pure"
    assert json.loads(rest)["objective"] == 5
