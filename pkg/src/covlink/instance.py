"""Problem data, link structures, instance I/O and the classical CIP baseline."""
from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .geometry import Point, Disk, circle_circle_intersections

CIP_MERGE_TOL = 1e-9


def fmt_float(v: float) -> str:
    """Shortest text that reads back as the same double."""
    return repr(float(v))


@dataclass(frozen=True)
class Instance:
    points: tuple[Point, ...]
    weights: tuple[float, ...]
    cover_radii: tuple[float, ...]
    link_radius: float
    p: int

    def __post_init__(self):
        n = len(self.points)
        if n < 1:
            raise ValueError("instance needs at least one demand point")
        if len(self.weights) != n:
            raise ValueError("weights length mismatch")
        if len(self.cover_radii) != n:
            raise ValueError("radii length mismatch")
        for pt in self.points:
            if not (math.isfinite(pt.x) and math.isfinite(pt.y)):
                raise ValueError("non-finite coordinate")
        if any(not (w > 0) or not math.isfinite(w) for w in self.weights):
            raise ValueError("weights must be positive")
        if any(not (R >= 0) or not math.isfinite(R) for R in self.cover_radii):
            raise ValueError("negative radius")
        if not (self.link_radius >= 0) or not math.isfinite(self.link_radius):
            raise ValueError("negative link radius")
        if int(self.p) != self.p or self.p < 1:
            raise ValueError("p must be a positive integer")

    @classmethod
    def create(cls, points, weights, cover_radii, link_radius, p) -> "Instance":
        n = len(points)
        if np.ndim(cover_radii) == 0:
            cover_radii = [cover_radii] * n
        if np.ndim(weights) == 0:
            weights = [weights] * n
        return cls(tuple(Point(float(x), float(y)) for x, y in points),
                   tuple(float(w) for w in weights),
                   tuple(float(R) for R in cover_radii),
                   float(link_radius), int(p))

    @property
    def n(self) -> int:
        return len(self.points)

    def replace(self, **kw) -> "Instance":
        d = dict(points=self.points, weights=self.weights, cover_radii=self.cover_radii,
                 link_radius=self.link_radius, p=self.p)
        for k, v in kw.items():
            if k == "cover_radii" and np.ndim(v) == 0:
                v = [v] * self.n
            d[k] = v
        return Instance.create(d["points"], d["weights"], d["cover_radii"], d["link_radius"],
                               d["p"])

    def disk(self, i: int) -> Disk:
        return Disk(self.points[i], self.cover_radii[i])

    def digest(self) -> str:
        return hashlib.sha256(serialize_instance(self).encode()).hexdigest()


# ---------------------------------------------------------------------------
# link structures


class GraphKind(str, enum.Enum):
    COMPLETE = "complete"
    CYCLE = "cycle"
    LINE = "line"
    STAR = "star"
    RINGSTAR = "ringstar"
    MATCHING = "matching"

    @classmethod
    def parse(cls, s) -> "GraphKind":
        if isinstance(s, GraphKind):
            return s
        key = str(s).strip().lower().replace("-", "").replace("_", "")
        for k in cls:
            if k.value == key:
                return k
        raise ValueError(f"unknown graph kind {s!r}")


@dataclass(frozen=True)
class GraphStructure:
    """A fixed link graph on facilities ``1..p`` (edges are 1-based, j < k)."""

    kind: GraphKind
    p: int
    edges: tuple[tuple[int, int], ...]
    neighborhoods: dict = field(compare=False, hash=False)

    @property
    def edges0(self) -> tuple[tuple[int, int], ...]:
        return tuple((j - 1, k - 1) for j, k in self.edges)

    def neighbors0(self, j: int) -> tuple[int, ...]:
        return tuple(k - 1 for k in sorted(self.neighborhoods[j + 1]))

    def degree(self, j: int) -> int:
        return len(self.neighborhoods[j + 1])

    def adjacency0(self) -> list[list[bool]]:
        a = [[False] * self.p for _ in range(self.p)]
        for j, k in self.edges0:
            a[j][k] = a[k][j] = True
        return a

    def new_label_choices(self, used: tuple[int, ...]) -> tuple[int, ...]:
        """Unused 0-based labels up to automorphisms fixing ``used`` pointwise.

        Opening a class at either of two labels in the same orbit leads to
        symmetric subtrees, so one representative per orbit suffices.
        """
        return _orbit_reps(self.p, self.edges0, tuple(used))


def build_edges(kind, p: int) -> GraphStructure:
    kind = GraphKind.parse(kind)
    p = int(p)
    if p < 1:
        raise ValueError("p must be positive")
    if kind is GraphKind.MATCHING and p % 2:
        raise ValueError("matching requires even p")
    es: set[tuple[int, int]] = set()
    if kind is GraphKind.COMPLETE:
        es = {(j, k) for j in range(1, p + 1) for k in range(j + 1, p + 1)}
    elif kind is GraphKind.CYCLE:
        es = {(j, j + 1) for j in range(1, p)}
        if p >= 2:
            es.add((1, p))
    elif kind is GraphKind.LINE:
        es = {(j, j + 1) for j in range(1, p)}
    elif kind is GraphKind.STAR:
        es = {(1, k) for k in range(2, p + 1)}
    elif kind is GraphKind.RINGSTAR:
        es = {(1, k) for k in range(2, p + 1)} | {(j, j + 1) for j in range(2, p)}
    elif kind is GraphKind.MATCHING:
        es = {(j, j + 1) for j in range(1, p, 2)}
    edges = tuple(sorted(es))
    nb = {j: set() for j in range(1, p + 1)}
    for j, k in edges:
        nb[j].add(k)
        nb[k].add(j)
    return GraphStructure(kind, p, edges, {j: frozenset(v) for j, v in nb.items()})


def _find_automorphism(p, adj, fixed: dict) -> bool:
    """Is there an edge-preserving permutation extending ``fixed``?"""
    img = dict(fixed)
    for a, b in img.items():
        for c, d in img.items():
            if adj[a][c] != adj[b][d]:
                return False
    deg = [sum(row) for row in adj]
    order = [v for v in range(p) if v not in img]
    taken = set(img.values())

    def rec(t):
        if t == len(order):
            return True
        v = order[t]
        for w in range(p):
            if w in taken or deg[w] != deg[v]:
                continue
            if all(adj[v][u] == adj[w][img[u]] for u in img):
                img[v] = w
                taken.add(w)
                if rec(t + 1):
                    return True
                del img[v]
                taken.discard(w)
        return False

    return rec(0)


@lru_cache(maxsize=4096)
def _orbit_reps(p: int, edges0: tuple, used: tuple) -> tuple[int, ...]:
    adj = [[False] * p for _ in range(p)]
    for j, k in edges0:
        adj[j][k] = adj[k][j] = True
    free = [v for v in range(p) if v not in used]
    reps: list[int] = []
    for v in free:
        fixed = {u: u for u in used}
        if not any(_find_automorphism(p, adj, {**fixed, v: w}) for w in reps):
            reps.append(v)
    return tuple(reps)


# ---------------------------------------------------------------------------
# text and JSON formats


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse_instance(text: str) -> Instance:
    """Parse the whitespace text format or its JSON equivalent."""
    if text.lstrip().startswith("{"):
        return _parse_json(text)
    lines = [(no, _strip_comment(raw)) for no, raw in enumerate(text.splitlines(), 1)]
    lines = [(no, s) for no, s in lines if s]
    if len(lines) < 3:
        raise ValueError("instance text needs a header, radii and weights lines")

    def nums(no, s, what):
        out = []
        for tok in s.split():
            try:
                out.append(float(tok))
            except ValueError:
                raise ValueError(f"line {no}: non-numeric {what} token {tok!r}") from None
        return out

    no, head = lines[0]
    h = head.split()
    if len(h) != 3:
        raise ValueError(f"line {no}: header must be 'n p r'")
    try:
        n = int(h[0])
        p = int(h[1])
    except ValueError:
        raise ValueError(f"line {no}: n and p must be integers") from None
    r = nums(no, h[2], "link radius")[0]
    if n < 1:
        raise ValueError(f"line {no}: n must be positive")
    if p < 1:
        raise ValueError(f"line {no}: p must be positive")
    if r < 0:
        raise ValueError(f"line {no}: negative link radius")
    no, s = lines[1]
    radii = nums(no, s, "radius")
    if len(radii) != n:
        raise ValueError(f"line {no}: radii length mismatch ({len(radii)} != {n})")
    if any(R < 0 for R in radii):
        raise ValueError(f"line {no}: negative radius")
    no, s = lines[2]
    weights = nums(no, s, "weight")
    if len(weights) != n:
        raise ValueError(f"line {no}: weights length mismatch ({len(weights)} != {n})")
    if any(w <= 0 for w in weights):
        raise ValueError(f"line {no}: weights must be positive")
    coords = lines[3:]
    if len(coords) != n:
        last = coords[-1][0] if coords else lines[2][0]
        raise ValueError(f"line {last}: points length mismatch ({len(coords)} != {n})")
    pts = []
    for no, s in coords:
        xy = nums(no, s, "coordinate")
        if len(xy) != 2:
            raise ValueError(f"line {no}: expected 'x y'")
        pts.append(xy)
    return Instance.create(pts, weights, radii, r, p)


def _parse_json(text: str) -> Instance:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"line {exc.lineno}: invalid JSON ({exc.msg})") from None
    for key in ("points", "weights", "cover_radii", "link_radius", "p"):
        if key not in d:
            raise ValueError(f"missing key {key!r}")
    n = len(d["points"])
    if len(d["weights"]) != n:
        raise ValueError("weights length mismatch")
    if len(d["cover_radii"]) != n:
        raise ValueError("radii length mismatch")
    if any(R < 0 for R in d["cover_radii"]):
        raise ValueError("negative radius")
    return Instance.create(d["points"], d["weights"], d["cover_radii"], d["link_radius"], d["p"])


def serialize_instance(inst: Instance) -> str:
    lines = [f"{inst.n} {inst.p} {fmt_float(inst.link_radius)}",
             " ".join(fmt_float(R) for R in inst.cover_radii),
             " ".join(fmt_float(w) for w in inst.weights)]
    lines += [f"{fmt_float(pt.x)} {fmt_float(pt.y)}" for pt in inst.points]
    return "\n".join(lines) + "\n"


def instance_to_json(inst: Instance) -> dict:
    return {"points": [[pt.x, pt.y] for pt in inst.points], "weights": list(inst.weights),
            "cover_radii": list(inst.cover_radii), "link_radius": inst.link_radius, "p": inst.p}


def load_instance(path) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read())


# ---------------------------------------------------------------------------
# built-in and random instances

_EXAMPLE1_POINTS = [
    (0.34, 0.59), (0.13, 0.9), (0.67, 0.53), (0.41, 0.03), (0.36, 0.2),
    (0.09, 0.1), (0.29, 1.0), (0.68, 0.56), (0.08, 0.5), (0.86, 0.71),
    (0.66, 0.63), (0.87, 0.05), (0.22, 0.44), (0.22, 0.11), (0.11, 0.53),
]
_EXAMPLE2_POINTS = [(0.0, 0.0), (1.0, 0.0), (3.25, 0.0), (5.0, 0.0), (6.0, 0.0)]

BUILTIN_NAMES = ("example1", "example2")


def builtin_example(name: str) -> Instance:
    if name == "example1":
        return Instance.create(_EXAMPLE1_POINTS, 1.0, 0.1, 0.3, 6)
    if name == "example2":
        return Instance.create(_EXAMPLE2_POINTS, 1.0, 0.5, 2.5, 3)
    raise ValueError(f"unknown builtin instance {name!r}")


def gen_random(seed: int, n: int, weight_mode: str = "unit", R: float = 0.1, r: float = 0.2,
               p: int = 2) -> Instance:
    """Uniform points in the unit square with equal radii."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2))
    if weight_mode == "unit":
        w = np.ones(n)
    elif weight_mode == "uniform":
        w = 1.0 - rng.random(n)  # (0, 1]
    else:
        raise ValueError(f"unknown weight mode {weight_mode!r}")
    return Instance.create(pts.tolist(), w.tolist(), R, r, p)


# ---------------------------------------------------------------------------
# circle intersection points and the no-link baseline


@dataclass(frozen=True)
class CipSet:
    candidates: tuple[Point, ...]
    coverage: tuple[frozenset, ...]


def compute_cip(inst: Instance) -> CipSet:
    cands: list[Point] = list(inst.points)
    for i in range(inst.n):
        for k in range(i + 1, inst.n):
            a, b = inst.disk(i), inst.disk(k)
            if a.center == b.center:
                continue
            cands.extend(circle_circle_intersections(a, b))
    kept: list[Point] = []
    for c in cands:
        if all(math.hypot(c.x - q.x, c.y - q.y) >= CIP_MERGE_TOL for q in kept):
            kept.append(c)
    cov = []
    for c in kept:
        cov.append(frozenset(i for i in range(inst.n)
                             if math.hypot(c.x - inst.points[i].x, c.y - inst.points[i].y)
                             <= inst.cover_radii[i] + 1e-12))
    return CipSet(tuple(kept), tuple(cov))


def solve_mclp_cip(inst: Instance, cip: CipSet | None = None) -> tuple[float, list[int]]:
    """Best ``p`` candidates for weighted coverage, ignoring links.

    Depth-first branch-and-bound; the bound adds the largest marginal gains
    of the remaining candidates, which is valid because coverage is
    submodular. Returns the objective and the chosen candidate indices.
    """
    if cip is None:
        cip = compute_cip(inst)
    w = inst.weights
    masks = [sum(1 << i for i in cov) for cov in cip.coverage]
    # drop candidates whose coverage is contained in another's
    order = sorted(range(len(masks)), key=lambda c: (-bin(masks[c]).count("1"), c))
    keep: list[int] = []
    for c in order:
        if not any(masks[c] | masks[d] == masks[d] for d in keep):
            keep.append(c)

    def wsum(mask):
        s = 0.0
        i = 0
        while mask:
            if mask & 1:
                s += w[i]
            mask >>= 1
            i += 1
        return s

    keep.sort(key=lambda c: (-wsum(masks[c]), c))
    k = min(inst.p, len(keep))
    best = [-1.0, []]

    def rec(start, chosen, covered, val):
        if len(chosen) == k or start == len(keep):
            if val > best[0] + 1e-12:
                best[0] = val
                best[1] = list(chosen)
            return
        need = k - len(chosen)
        gains = sorted((wsum(masks[c] & ~covered) for c in keep[start:]), reverse=True)
        if val + sum(gains[:need]) <= best[0] + 1e-12:
            return
        for t in range(start, len(keep)):
            c = keep[t]
            chosen.append(c)
            rec(t + 1, chosen, covered | masks[c], val + wsum(masks[c] & ~covered))
            chosen.pop()

    rec(0, [], 0, 0.0)
    chosen = sorted(best[1])
    # pad with unused candidates so exactly p are returned when possible
    for c in range(len(masks)):
        if len(chosen) >= min(inst.p, len(masks)):
            break
        if c not in chosen:
            chosen.append(c)
    return best[0], sorted(chosen)
