"""Backend selection for the numerical kernels.

The compiled extension is used when it imports and ``COVLINK_PURE`` is not
set to a true value; otherwise the pure-Python twin is used. Callers pass
numpy arrays (float64 coordinates, int64 offsets and indices) and get the
same return shapes from either backend.
"""
import os

import numpy as np

from . import _pykernels

GEOM_TOL = _pykernels.GEOM_TOL
NONEMPTY = _pykernels.NONEMPTY
EMPTY = _pykernels.EMPTY
AMBIGUOUS = _pykernels.AMBIGUOUS


def _load_compiled():
    if os.environ.get("COVLINK_PURE", "").strip().lower() in ("1", "true", "yes", "on"):
        return None
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels


_compiled = _load_compiled()
BACKEND = "compiled" if _compiled is not None else "pure"


def _f(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _i(a):
    return np.ascontiguousarray(a, dtype=np.int64)


class _CompiledBackend:
    name = "compiled"

    def __init__(self, mod):
        self.mod = mod

    def circle_points(self, x1, y1, r1, x2, y2, r2):
        return self.mod.circle_points(x1, y1, r1, x2, y2, r2)

    def project_disks(self, cx, cy, rad, x, y):
        return self.mod.project_disks(_f(cx), _f(cy), _f(rad), float(x), float(y))

    def support_disks(self, cx, cy, rad, ux, uy):
        return self.mod.support_disks(_f(cx), _f(cy), _f(rad), float(ux), float(uy))

    def dykstra_disks(self, cx, cy, rad, x, y, max_iter, tol):
        return self.mod.dykstra_disks(_f(cx), _f(cy), _f(rad), float(x), float(y),
                                      int(max_iter), float(tol))

    def dykstra_distance_batch(self, cx, cy, rad, xs, ys, max_iter, tol):
        return self.mod.dykstra_distance_batch(_f(cx), _f(cy), _f(rad), _f(xs), _f(ys),
                                               int(max_iter), float(tol))

    def region_distance_batch(self, rcx, rcy, rrad, off, margin, k, xs, ys):
        return self.mod.region_distance_batch(_f(rcx), _f(rcy), _f(rrad), _i(off), _f(margin),
                                              int(k), _f(xs), _f(ys))

    def emptiness(self, rcx, rcy, rrad, off, margin, regions, delta, max_iter):
        return self.mod.emptiness(_f(rcx), _f(rcy), _f(rrad), _i(off), _f(margin),
                                  _i(regions), float(delta), int(max_iter))

    def emptiness_batch(self, rcx, rcy, rrad, off, margin, tuples, delta, max_iter):
        t = np.ascontiguousarray(tuples, dtype=np.int64)
        if t.ndim != 2:
            t = t.reshape(len(t), -1)
        return self.mod.emptiness_batch(_f(rcx), _f(rcy), _f(rrad), _i(off), _f(margin),
                                        t, float(delta), int(max_iter))

    def rho_solve(self, fcx, fcy, frad, foff, bnd, ej, ek, r, x0, sep_tol, decide_only,
                  max_iter):
        return self.mod.rho_solve(_f(fcx), _f(fcy), _f(frad), _i(foff),
                                  tuple(float(b) for b in bnd), _i(ej), _i(ek), float(r),
                                  _f(x0), float(sep_tol), bool(decide_only), int(max_iter))


def _l(a):
    return np.asarray(a, dtype=np.float64).tolist()


def _li(a):
    return [int(v) for v in np.asarray(a, dtype=np.int64).ravel()]


class _PureBackend:
    name = "pure"
    mod = _pykernels

    def circle_points(self, x1, y1, r1, x2, y2, r2):
        return _pykernels.circle_points(x1, y1, r1, x2, y2, r2)

    def project_disks(self, cx, cy, rad, x, y):
        return _pykernels.project_disks(_l(cx), _l(cy), _l(rad), float(x), float(y))

    def support_disks(self, cx, cy, rad, ux, uy):
        return _pykernels.support_disks(_l(cx), _l(cy), _l(rad), float(ux), float(uy))

    def dykstra_disks(self, cx, cy, rad, x, y, max_iter, tol):
        return _pykernels.dykstra_disks(_l(cx), _l(cy), _l(rad), float(x), float(y),
                                        int(max_iter), float(tol))

    def dykstra_distance_batch(self, cx, cy, rad, xs, ys, max_iter, tol):
        return _pykernels.dykstra_distance_batch(_l(cx), _l(cy), _l(rad), _l(xs), _l(ys),
                                                 int(max_iter), float(tol))

    def region_distance_batch(self, rcx, rcy, rrad, off, margin, k, xs, ys):
        return _pykernels.region_distance_batch(_l(rcx), _l(rcy), _l(rrad), _li(off),
                                                _l(margin), int(k), _l(xs), _l(ys))

    def emptiness(self, rcx, rcy, rrad, off, margin, regions, delta, max_iter):
        return _pykernels.emptiness(_l(rcx), _l(rcy), _l(rrad), _li(off), _l(margin),
                                    _li(regions), float(delta), int(max_iter))

    def emptiness_batch(self, rcx, rcy, rrad, off, margin, tuples, delta, max_iter):
        t = np.asarray(tuples, dtype=np.int64)
        if t.ndim != 2:
            t = t.reshape(len(t), -1)
        return _pykernels.emptiness_batch(_l(rcx), _l(rcy), _l(rrad), _li(off), _l(margin),
                                          t.tolist(), float(delta), int(max_iter))

    def rho_solve(self, fcx, fcy, frad, foff, bnd, ej, ek, r, x0, sep_tol, decide_only,
                  max_iter):
        return _pykernels.rho_solve(_l(fcx), _l(fcy), _l(frad), _li(foff),
                                    tuple(float(b) for b in bnd), _li(ej), _li(ek), float(r),
                                    _l(x0), float(sep_tol), bool(decide_only), int(max_iter))


def get_backend(name=None):
    """Return a backend object; ``name`` is "compiled", "pure" or None (active)."""
    if name is None:
        name = BACKEND
    if name == "pure":
        return _PureBackend()
    if name == "compiled":
        if _compiled is None:
            try:
                from . import _kernels
            except ImportError as exc:
                raise RuntimeError("compiled kernels are not built") from exc
            return _CompiledBackend(_kernels)
        return _CompiledBackend(_compiled)
    raise ValueError(f"unknown backend {name!r}")


def compiled_available():
    try:
        from . import _kernels  # noqa: F401
    except ImportError:
        return False
    return True


_active = get_backend()

circle_points = _active.circle_points
project_disks = _active.project_disks
support_disks = _active.support_disks
dykstra_disks = _active.dykstra_disks
dykstra_distance_batch = _active.dykstra_distance_batch
region_distance_batch = _active.region_distance_batch
emptiness = _active.emptiness
emptiness_batch = _active.emptiness_batch
rho_solve = _active.rho_solve
