"""Planar predicates over disks, lenses and their enlargements.

Regions are intersections of one or two closed disks, optionally grown by a
margin (the Minkowski sum with a disk of that radius). Projections are exact;
emptiness of two or three general regions is decided by a certified
ellipsoid method, and the closed-form tests cover the disk-only cases.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels

GEOM_TOL = kernels.GEOM_TOL


class Point(NamedTuple):
    x: float
    y: float


class Disk(NamedTuple):
    center: Point
    radius: float


def _pt(p) -> Point:
    return p if isinstance(p, Point) else Point(float(p[0]), float(p[1]))


def circle_circle_intersections(d1: Disk, d2: Disk) -> list[Point]:
    """Points on both boundary circles, sorted lexicographically.

    Tangent circles give one point; disjoint or nested circles give none.
    """
    (x1, y1), r1 = d1
    (x2, y2), r2 = d2
    if x1 == x2 and y1 == y2:
        if r1 == r2:
            raise ValueError("coincident circles")
        return []
    pts = kernels.circle_points(x1, y1, r1, x2, y2, r2)
    return sorted(Point(px, py) for px, py in pts)


@dataclass(frozen=True)
class Lens:
    """Intersection of two disks, with the boundary vertices cached."""

    d1: Disk
    d2: Disk
    vertices: tuple[Point, ...] = ()

    @classmethod
    def of(cls, d1: Disk, d2: Disk) -> "Lens":
        d1 = Disk(_pt(d1[0]), float(d1[1]))
        d2 = Disk(_pt(d2[0]), float(d2[1]))
        if not disk_pair_nonempty(d1.center, d1.radius, d2.center, d2.radius):
            raise ValueError("empty lens: disks do not intersect")
        if d1.center == d2.center:
            return cls(d1, d2, ())
        return cls(d1, d2, tuple(circle_circle_intersections(d1, d2)))


@dataclass(frozen=True)
class ConvexRegion:
    """A disk, a lens, or a lens enlarged by ``margin``.

    ``kind`` is "disk", "lens" or "enlarged"; ``disks`` holds the one or two
    disks whose intersection is the base set.
    """

    kind: str
    disks: tuple[Disk, ...]
    margin: float = 0.0
    _arrays: tuple = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("disk", "lens", "enlarged"):
            raise ValueError(f"unknown region kind {self.kind!r}")
        if self.margin < 0:
            raise ValueError("negative margin")
        arr = (np.array([d.center.x for d in self.disks]),
               np.array([d.center.y for d in self.disks]),
               np.array([d.radius for d in self.disks]))
        object.__setattr__(self, "_arrays", arr)

    @classmethod
    def disk(cls, d: Disk) -> "ConvexRegion":
        return cls("disk", (Disk(_pt(d[0]), float(d[1])),))

    @classmethod
    def lens(cls, lens: Lens) -> "ConvexRegion":
        return cls("lens", (lens.d1, lens.d2))

    @classmethod
    def enlarged(cls, lens: Lens, margin: float) -> "ConvexRegion":
        return cls("enlarged", (lens.d1, lens.d2), float(margin))

    @classmethod
    def oset(cls, a1, R1: float, a2, R2: float, r: float) -> "ConvexRegion":
        """Points within ``r`` of the lens of two coverage disks.

        Coincident centres collapse to a single disk of radius min(R) + r.
        """
        a1, a2 = _pt(a1), _pt(a2)
        if a1 == a2:
            return cls.disk(Disk(a1, min(R1, R2) + r))
        return cls.enlarged(Lens.of(Disk(a1, R1), Disk(a2, R2)), r)


def project(region: ConvexRegion, x) -> Point:
    """Nearest point of ``region`` to ``x``."""
    x = _pt(x)
    cx, cy, rad = region._arrays
    px, py, _ = kernels.project_disks(cx, cy, rad, x.x, x.y)
    m = region.margin
    if m <= 0.0:
        return Point(px, py)
    dx, dy = x.x - px, x.y - py
    d = math.hypot(dx, dy)
    if d <= m:
        return x
    return Point(px + m * dx / d, py + m * dy / d)


def distance(region: ConvexRegion, x) -> float:
    x = _pt(x)
    q = project(region, x)
    return math.hypot(x.x - q.x, x.y - q.y)


def distance_batch(region: ConvexRegion, xs, ys) -> np.ndarray:
    """Distances from many points to ``region``."""
    cx, cy, rad = region._arrays
    off = np.array([0, len(rad)], dtype=np.int64)
    return kernels.region_distance_batch(cx, cy, rad, off, np.array([region.margin]), 0,
                                         np.ravel(xs), np.ravel(ys))


def contains(region: ConvexRegion, x, tol: float = GEOM_TOL) -> bool:
    return distance(region, x) <= tol


def disk_pair_nonempty(a1, R1: float, a2, R2: float) -> bool:
    a1, a2 = _pt(a1), _pt(a2)
    return math.hypot(a1.x - a2.x, a1.y - a2.y) <= R1 + R2 + GEOM_TOL


def _contained(inner: Disk, outer: Disk) -> bool:
    (x1, y1), r1 = inner
    (x2, y2), r2 = outer
    return r1 <= r2 and math.hypot(x1 - x2, y1 - y2) <= r2 - r1 + GEOM_TOL


def _in_disk(p: Point, d: Disk) -> bool:
    return math.hypot(p.x - d.center.x, p.y - d.center.y) <= d.radius + GEOM_TOL


def disk_triple_nonempty(d1: Disk, d2: Disk, d3: Disk) -> bool:
    """Exact test for a common point of three disks."""
    ds = [Disk(_pt(d[0]), float(d[1])) for d in (d1, d2, d3)]
    for a, b in combinations(ds, 2):
        if not disk_pair_nonempty(a.center, a.radius, b.center, b.radius):
            return False
    for i, j in ((0, 1), (0, 2), (1, 2), (1, 0), (2, 0), (2, 1)):
        if _contained(ds[i], ds[j]):
            rest = [ds[t] for t in range(3) if t != j]
            a, b = rest
            return disk_pair_nonempty(a.center, a.radius, b.center, b.radius)
    for i, j in combinations(range(3), 2):
        k = 3 - i - j
        for q in circle_circle_intersections(ds[i], ds[j]):
            if _in_disk(q, ds[k]):
                return True
    return False


def disk_oset_nonempty(d: Disk, lens: Lens, r: float) -> bool:
    c = _pt(d[0])
    q = project(ConvexRegion.lens(lens), c)
    return math.hypot(c.x - q.x, c.y - q.y) <= float(d[1]) + r + GEOM_TOL


def disks_nonempty(disks: Sequence[Disk]) -> bool:
    """Common point of any number of disks, via pairs and triples (Helly)."""
    ds = list(disks)
    for a, b in combinations(ds, 2):
        if not disk_pair_nonempty(a[0], a[1], b[0], b[1]):
            return False
    for a, b, c in combinations(ds, 3):
        if not disk_triple_nonempty(a, b, c):
            return False
    return True


# ---------------------------------------------------------------------------
# iterative emptiness


class Verdict(enum.Enum):
    NONEMPTY = kernels.NONEMPTY
    EMPTY = kernels.EMPTY
    AMBIGUOUS = kernels.AMBIGUOUS


@dataclass(frozen=True)
class IterConfig:
    delta: float = 1e-9
    max_iter: int = 20000


class EmptinessResult(NamedTuple):
    verdict: Verdict
    residual: float
    lower_bound: float
    witness: Point | None


class RegionTable:
    """Packed storage of many regions for batched emptiness tests."""

    def __init__(self, regions: Sequence[ConvexRegion] = ()):
        self._cx: list[float] = []
        self._cy: list[float] = []
        self._rad: list[float] = []
        self._off: list[int] = [0]
        self._margin: list[float] = []
        self._packed = None
        for reg in regions:
            self.add(reg)

    def __len__(self):
        return len(self._margin)

    def add(self, region: ConvexRegion) -> int:
        for d in region.disks:
            self._cx.append(d.center.x)
            self._cy.append(d.center.y)
            self._rad.append(d.radius)
        self._off.append(len(self._cx))
        self._margin.append(region.margin)
        self._packed = None
        return len(self._margin) - 1

    def add_disks(self, centers: Sequence, radii: Sequence[float], margin: float = 0.0) -> int:
        """Intersection of up to two disks, enlarged by ``margin``."""
        for c, R in zip(centers, radii):
            self._cx.append(float(c[0]))
            self._cy.append(float(c[1]))
            self._rad.append(float(R))
        self._off.append(len(self._cx))
        self._margin.append(float(margin))
        self._packed = None
        return len(self._margin) - 1

    def arrays(self):
        if self._packed is None:
            self._packed = (np.array(self._cx, dtype=np.float64),
                            np.array(self._cy, dtype=np.float64),
                            np.array(self._rad, dtype=np.float64),
                            np.array(self._off, dtype=np.int64),
                            np.array(self._margin, dtype=np.float64))
        return self._packed

    def test(self, indices: Sequence[int], cfg: IterConfig = IterConfig()) -> EmptinessResult:
        cx, cy, rad, off, mg = self.arrays()
        code, f, lb, wx, wy, _ = kernels.emptiness(cx, cy, rad, off, mg, np.asarray(indices),
                                                   cfg.delta, cfg.max_iter)
        v = Verdict(code)
        return EmptinessResult(v, f, lb, Point(wx, wy) if v is Verdict.NONEMPTY else None)

    def test_batch(self, tuples, cfg: IterConfig = IterConfig()):
        """Verdict codes, residuals and lower bounds for rows of region indices."""
        cx, cy, rad, off, mg = self.arrays()
        t = np.asarray(tuples, dtype=np.int64)
        if t.size == 0:
            return (np.empty(0, dtype=np.int64), np.empty(0), np.empty(0))
        return kernels.emptiness_batch(cx, cy, rad, off, mg, t, cfg.delta, cfg.max_iter)


def emptiness_margin(regions: Sequence[ConvexRegion],
                     cfg: IterConfig = IterConfig()) -> EmptinessResult:
    """Decide whether the regions share a point.

    Minimizes the largest distance to the regions. NONEMPTY comes with a
    witness whose residual is at most ``cfg.delta``; EMPTY means a certified
    lower bound on that distance exceeds ``10 * cfg.delta``; anything in
    between is AMBIGUOUS.
    """
    if not regions:
        raise ValueError("no regions")
    return RegionTable(regions).test(range(len(regions)), cfg)


# ---------------------------------------------------------------------------
# Minkowski-sum membership, both sides of the pairwise identity


def dykstra_distance(disks: Sequence[Disk], x, max_iter: int = 10000, tol: float = 1e-10) -> float:
    """Distance from ``x`` to a disk intersection by Dykstra's projections."""
    x = _pt(x)
    cx = np.array([d[0][0] for d in disks], dtype=np.float64)
    cy = np.array([d[0][1] for d in disks], dtype=np.float64)
    rad = np.array([d[1] for d in disks], dtype=np.float64)
    px, py, _ = kernels.dykstra_disks(cx, cy, rad, x.x, x.y, max_iter, tol)
    return math.hypot(x.x - px, x.y - py)


def dykstra_distance_batch(disks: Sequence[Disk], xs, ys, max_iter: int = 10000,
                           tol: float = 1e-10):
    """Dykstra distances for many points, with a per-point convergence flag."""
    cx = np.array([d[0][0] for d in disks], dtype=np.float64)
    cy = np.array([d[0][1] for d in disks], dtype=np.float64)
    rad = np.array([d[1] for d in disks], dtype=np.float64)
    d, its = kernels.dykstra_distance_batch(cx, cy, rad, np.ravel(xs), np.ravel(ys), max_iter,
                                            tol)
    return d, its < max_iter


def minkowski_member_oracle(disks: Sequence[Disk], r: float, x) -> bool:
    """Is ``x`` within ``r`` of the intersection of ``disks``? (Dykstra side)."""
    disks = [Disk(_pt(d[0]), float(d[1])) for d in disks]
    if not disks_nonempty(disks):
        raise ValueError("disk intersection is empty")
    return dykstra_distance(disks, x) <= r + GEOM_TOL


def minkowski_pairwise_member(disks: Sequence[Disk], r: float, x) -> bool:
    """Is ``x`` in every pairwise enlarged lens? (the other side)."""
    disks = [Disk(_pt(d[0]), float(d[1])) for d in disks]
    if len(disks) == 1:
        return distance(ConvexRegion.disk(disks[0]), x) <= r + GEOM_TOL
    for a, b in combinations(disks, 2):
        if not contains(ConvexRegion.oset(a.center, a.radius, b.center, b.radius, r), x):
            return False
    return True
