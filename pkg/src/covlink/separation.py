"""Facility placement for a fixed assignment.

``solve_rho`` minimizes the total excess link length
``sum over edges of max(0, |X_j - X_k| - r)`` with every facility inside the
coverage disks of its class. Zero certifies the assignment; a positive value
yields a no-good cut. ``recover_placement`` optionally re-optimizes a
feasible witness into a compact layout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from . import kernels
from .formulation import Constraint
from .geometry import Point, disks_nonempty
from .instance import GraphStructure, Instance


@dataclass(frozen=True)
class SepConfig:
    sep_tol: float = 1e-6
    max_iter: int = 100000
    feas_tol: float = 1e-7


@dataclass(frozen=True)
class Placement:
    coords: tuple[Point, ...]
    rho: float
    per_edge_slack: dict = field(compare=False)
    converged: bool
    lower_bound: float = 0.0


def classes_of(choice: Sequence, p: int) -> list[list[int]]:
    """Classes ``C_1..C_p`` (0-based lists) from a choice vector (1-based or None)."""
    cls = [[] for _ in range(p)]
    for i, j in enumerate(_choice_of(choice)):
        if j is not None:
            if not 1 <= j <= p:
                raise ValueError(f"facility index {j} out of range")
            cls[j - 1].append(i)
    return cls


def _choice_of(assignment) -> Sequence:
    return getattr(assignment, "choice", assignment)


class _Problem:
    """Packed arrays of the coverage sets and links for the kernels."""

    def __init__(self, inst: Instance, structure: GraphStructure, classes):
        self.p = structure.p
        cx, cy, rad, off = [], [], [], [0]
        for j in range(self.p):
            for i in classes[j]:
                cx.append(inst.points[i].x)
                cy.append(inst.points[i].y)
                rad.append(inst.cover_radii[i])
            off.append(len(cx))
        self.fcx = np.array(cx, dtype=np.float64)
        self.fcy = np.array(cy, dtype=np.float64)
        self.frad = np.array(rad, dtype=np.float64)
        self.foff = np.array(off, dtype=np.int64)
        e0 = structure.edges0
        self.ej = np.array([e[0] for e in e0], dtype=np.int64)
        self.ek = np.array([e[1] for e in e0], dtype=np.int64)
        self.r = inst.link_radius
        if len(cx):
            # every optimum can be moved into a disk containing all coverage disks
            bx, by = float(np.mean(self.fcx)), float(np.mean(self.fcy))
            bR = float(np.max(np.hypot(self.fcx - bx, self.fcy - by) + self.frad))
        else:
            bx = by = 0.0
            bR = 1.0
        self.bnd = (bx, by, bR + 1e-9)

    def project(self, j, x, y):
        lo, hi = self.foff[j], self.foff[j + 1]
        if hi > lo:
            px, py, _ = kernels.project_disks(self.fcx[lo:hi], self.fcy[lo:hi], self.frad[lo:hi],
                                              x, y)
            return px, py
        bx, by, bR = self.bnd
        d = math.hypot(x - bx, y - by)
        if d <= bR:
            return x, y
        return bx + bR * (x - bx) / d, by + bR * (y - by) / d


def _initial(inst: Instance, structure: GraphStructure, classes, prob: _Problem):
    p = structure.p
    init: list = [None] * p
    for j in range(p):
        if classes[j]:
            mx = sum(inst.points[i].x for i in classes[j]) / len(classes[j])
            my = sum(inst.points[i].y for i in classes[j]) / len(classes[j])
            init[j] = prob.project(j, mx, my)
    cx = sum(pt.x for pt in inst.points) / inst.n
    cy = sum(pt.y for pt in inst.points) / inst.n
    for j in range(p):
        if init[j] is None:
            nb = [init[k] for k in structure.neighbors0(j) if init[k] is not None]
            if nb:
                init[j] = prob.project(j, sum(q[0] for q in nb) / len(nb),
                                       sum(q[1] for q in nb) / len(nb))
            else:
                init[j] = prob.project(j, cx, cy)
    return np.array([c for q in init for c in q], dtype=np.float64)


def _check_coverage(inst: Instance, classes):
    for cl in classes:
        if len(cl) > 1 and not disks_nonempty([inst.disk(i) for i in cl]):
            raise ValueError("infeasible coverage")


def solve_rho_classes(inst: Instance, structure: GraphStructure, classes,
                      cfg: SepConfig = SepConfig(), decide_only: bool = False,
                      x0=None, check: bool = True) -> Placement:
    if check:
        _check_coverage(inst, classes)
    prob = _Problem(inst, structure, classes)
    if x0 is None:
        x0 = _initial(inst, structure, classes, prob)
    else:
        x0 = np.asarray(x0, dtype=np.float64).ravel()
    X, rho, lb, conv, _ = kernels.rho_solve(prob.fcx, prob.fcy, prob.frad, prob.foff, prob.bnd,
                                            prob.ej, prob.ek, prob.r, x0, cfg.sep_tol,
                                            decide_only, cfg.max_iter)
    coords = tuple(Point(X[2 * j], X[2 * j + 1]) for j in range(structure.p))
    slack = {}
    for j, k in structure.edges:
        a, b = coords[j - 1], coords[k - 1]
        slack[(j, k)] = max(0.0, math.hypot(a.x - b.x, a.y - b.y) - prob.r)
    return Placement(coords, float(rho), slack, bool(conv), float(lb))


def solve_rho(inst: Instance, structure: GraphStructure, assignment,
              cfg: SepConfig = SepConfig(), x0=None) -> Placement:
    """Global minimum of the total link slack for an assignment."""
    classes = classes_of(_choice_of(assignment), structure.p)
    return solve_rho_classes(inst, structure, classes, cfg, x0=x0)


def recover_placement(inst: Instance, structure: GraphStructure, assignment,
                      placement: Placement, compact: bool = False,
                      cfg: SepConfig = SepConfig()) -> Placement:
    """Witness coordinates; with ``compact`` the total link length is minimized."""
    if placement.rho > cfg.sep_tol:
        raise ValueError("placement is not feasible")
    if not compact or not structure.edges:
        return placement
    classes = classes_of(_choice_of(assignment), structure.p)
    p = structure.p
    r = inst.link_radius
    e0 = structure.edges0
    eps = 1e-12
    x_start = np.array([c for pt in placement.coords for c in pt], dtype=np.float64)

    def obj(X):
        val = 0.0
        g = np.zeros_like(X)
        for j, k in e0:
            dx = X[2 * j] - X[2 * k]
            dy = X[2 * j + 1] - X[2 * k + 1]
            d = math.sqrt(dx * dx + dy * dy + eps)
            val += d
            g[2 * j] += dx / d
            g[2 * j + 1] += dy / d
            g[2 * k] -= dx / d
            g[2 * k + 1] -= dy / d
        return val, g

    rows = []
    for j in range(p):
        for i in classes[j]:
            rows.append(("cov", j, inst.points[i].x, inst.points[i].y, inst.cover_radii[i]))
    for j, k in e0:
        rows.append(("link", j, k, 0.0, r))

    def cons(X):
        out = np.empty(len(rows))
        for t, (kind, j, a, b, R) in enumerate(rows):
            if kind == "cov":
                out[t] = R * R - (X[2 * j] - a) ** 2 - (X[2 * j + 1] - b) ** 2
            else:
                out[t] = R * R - (X[2 * j] - X[2 * a]) ** 2 - (X[2 * j + 1] - X[2 * a + 1]) ** 2
        return out

    def cons_jac(X):
        J = np.zeros((len(rows), 2 * p))
        for t, (kind, j, a, b, R) in enumerate(rows):
            if kind == "cov":
                J[t, 2 * j] = -2.0 * (X[2 * j] - a)
                J[t, 2 * j + 1] = -2.0 * (X[2 * j + 1] - b)
            else:
                dx = X[2 * j] - X[2 * a]
                dy = X[2 * j + 1] - X[2 * a + 1]
                J[t, 2 * j] = -2.0 * dx
                J[t, 2 * j + 1] = -2.0 * dy
                J[t, 2 * a] = 2.0 * dx
                J[t, 2 * a + 1] = 2.0 * dy
        return J

    res = minimize(obj, x_start, jac=True, method="SLSQP",
                   constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac}],
                   options={"maxiter": 500, "ftol": 1e-14})
    X = np.asarray(res.x, dtype=np.float64)
    # accept only if coverage and links hold within feas_tol
    ok = np.all(np.isfinite(X))
    if ok:
        for kind, j, a, b, R in rows:
            if kind == "cov":
                d = math.hypot(X[2 * j] - a, X[2 * j + 1] - b)
            else:
                d = math.hypot(X[2 * j] - X[2 * a], X[2 * j + 1] - X[2 * a + 1])
            if d > R + cfg.feas_tol:
                ok = False
                break
    if not ok:
        return placement
    # snap tiny coverage overshoots back inside with the exact projection
    prob = _Problem(inst, structure, classes)
    for j in range(p):
        if classes[j]:
            X[2 * j], X[2 * j + 1] = prob.project(j, X[2 * j], X[2 * j + 1])
    coords = tuple(Point(float(X[2 * j]), float(X[2 * j + 1])) for j in range(p))
    slack = {}
    for j, k in structure.edges:
        a, b = coords[j - 1], coords[k - 1]
        slack[(j, k)] = max(0.0, math.hypot(a.x - b.x, a.y - b.y) - r)
    rho = sum(slack.values())
    if rho > cfg.feas_tol * max(1, len(slack)):
        return placement
    return Placement(coords, rho, slack, placement.converged, placement.lower_bound)


def make_lazy_cut(assignment, structure: GraphStructure | None = None) -> Constraint:
    """No-good cut excluding this assignment and every assignment extending it."""
    choice = _choice_of(assignment)
    terms = tuple((i, j) for i, j in enumerate(choice) if j is not None)
    return Constraint(terms, len(terms) - 1, "LazyCut", tuple(i for i, _ in terms))
