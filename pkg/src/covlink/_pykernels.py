"""Pure-Python implementations of the numerical kernels.

Every function here has a twin in ``_kernels.pyx`` with the same signature
and the same arithmetic, so results agree to rounding. This module is used
when the compiled extension is unavailable or ``COVLINK_PURE=1`` is set.
"""
import math

import numpy as np

GEOM_TOL = 1e-12

NONEMPTY = 0
EMPTY = 1
AMBIGUOUS = 2


def circle_points(x1, y1, r1, x2, y2, r2):
    """Boundary intersection points of two circles (0, 1 or 2 of them)."""
    dx = x2 - x1
    dy = y2 - y1
    d = math.hypot(dx, dy)
    if d == 0.0:
        return []
    if d > r1 + r2 + GEOM_TOL or d < abs(r1 - r2) - GEOM_TOL:
        return []
    a = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d)
    h2 = r1 * r1 - a * a
    ux = dx / d
    uy = dy / d
    mx = x1 + a * ux
    my = y1 + a * uy
    if h2 <= 0.0:
        return [(mx, my)]
    h = math.sqrt(h2)
    return [(mx - h * uy, my + h * ux), (mx + h * uy, my - h * ux)]


def _in_all(cx, cy, rad, x, y, skip):
    for k in range(len(rad)):
        if k == skip:
            continue
        if math.hypot(x - cx[k], y - cy[k]) > rad[k] + GEOM_TOL:
            return False
    return True


def project_disks(cx, cy, rad, x, y):
    """Nearest point of a nonempty disk intersection to ``(x, y)``.

    The minimizer has at most two active circles, so it is either ``(x, y)``,
    a radial projection onto one disk, or a circle-circle vertex. Returns
    ``(px, py, found)``; ``found`` is False when the intersection is empty.
    """
    m = len(rad)
    if _in_all(cx, cy, rad, x, y, -1):
        return x, y, True
    best = math.inf
    bx = by = 0.0
    for i in range(m):
        dx = x - cx[i]
        dy = y - cy[i]
        d = math.hypot(dx, dy)
        if d > rad[i]:
            qx = cx[i] + rad[i] * dx / d
            qy = cy[i] + rad[i] * dy / d
            if _in_all(cx, cy, rad, qx, qy, i):
                dist = math.hypot(x - qx, y - qy)
                if dist < best:
                    best, bx, by = dist, qx, qy
    for i in range(m):
        for j in range(i + 1, m):
            for qx, qy in circle_points(cx[i], cy[i], rad[i], cx[j], cy[j], rad[j]):
                if _in_all(cx, cy, rad, qx, qy, -1):
                    dist = math.hypot(x - qx, y - qy)
                    if dist < best:
                        best, bx, by = dist, qx, qy
    if best == math.inf:
        return x, y, False
    return bx, by, True


def support_disks(cx, cy, rad, ux, uy):
    """Maximum of ``u . y`` over a disk intersection and a maximizer."""
    m = len(rad)
    nu = math.hypot(ux, uy)
    if nu == 0.0:
        px, py, found = project_disks(cx, cy, rad, cx[0], cy[0])
        return 0.0, px, py, found
    ex = ux / nu
    ey = uy / nu
    best = -math.inf
    bx = by = 0.0
    for i in range(m):
        qx = cx[i] + rad[i] * ex
        qy = cy[i] + rad[i] * ey
        if _in_all(cx, cy, rad, qx, qy, i):
            val = ux * qx + uy * qy
            if val > best:
                best, bx, by = val, qx, qy
    for i in range(m):
        for j in range(i + 1, m):
            for qx, qy in circle_points(cx[i], cy[i], rad[i], cx[j], cy[j], rad[j]):
                if _in_all(cx, cy, rad, qx, qy, -1):
                    val = ux * qx + uy * qy
                    if val > best:
                        best, bx, by = val, qx, qy
    if best == -math.inf:
        return 0.0, 0.0, 0.0, False
    return best, bx, by, True


def dykstra_disks(cx, cy, rad, x, y, max_iter, tol):
    """Dykstra's cyclic projections onto an intersection of disks."""
    m = len(rad)
    incx = [0.0] * m
    incy = [0.0] * m
    it = 0
    for it in range(1, max_iter + 1):
        change = 0.0
        for i in range(m):
            yx = x + incx[i]
            yy = y + incy[i]
            dx = yx - cx[i]
            dy = yy - cy[i]
            d = math.hypot(dx, dy)
            if d > rad[i]:
                nx = cx[i] + rad[i] * dx / d
                ny = cy[i] + rad[i] * dy / d
            else:
                nx, ny = yx, yy
            nix = yx - nx
            niy = yy - ny
            change += (nix - incx[i]) ** 2 + (niy - incy[i]) ** 2
            change += (nx - x) ** 2 + (ny - y) ** 2
            incx[i] = nix
            incy[i] = niy
            x, y = nx, ny
        if change < tol * tol:
            break
    return x, y, it


def dykstra_distance_batch(cx, cy, rad, xs, ys, max_iter, tol):
    """Distances and iteration counts; a count equal to ``max_iter`` means no convergence."""
    out = np.empty(len(xs))
    its = np.empty(len(xs), dtype=np.int64)
    for t in range(len(xs)):
        px, py, its[t] = dykstra_disks(cx, cy, rad, xs[t], ys[t], max_iter, tol)
        out[t] = math.hypot(xs[t] - px, ys[t] - py)
    return out, its


# ---------------------------------------------------------------------------
# regions: intersection of 1-2 disks, enlarged by a margin


def _region_project(rcx, rcy, rrad, off, margin, k, x, y):
    lo, hi = off[k], off[k + 1]
    px, py, _ = project_disks(rcx[lo:hi], rcy[lo:hi], rrad[lo:hi], x, y)
    dx = x - px
    dy = y - py
    d = math.hypot(dx, dy)
    mk = margin[k]
    if d <= mk:
        return x, y, 0.0
    return px + mk * dx / d, py + mk * dy / d, d - mk


def region_distance_batch(rcx, rcy, rrad, off, margin, k, xs, ys):
    out = np.empty(len(xs))
    for t in range(len(xs)):
        out[t] = _region_project(rcx, rcy, rrad, off, margin, k, xs[t], ys[t])[2]
    return out


def _region_anchor(rcx, rcy, rrad, off, k):
    """Anchor points: disk centre, or lens vertices (smaller centre if nested)."""
    lo, hi = off[k], off[k + 1]
    if hi - lo == 1:
        return [(rcx[lo], rcy[lo])]
    pts = circle_points(rcx[lo], rcy[lo], rrad[lo], rcx[lo + 1], rcy[lo + 1], rrad[lo + 1])
    if pts:
        return pts
    s = lo if rrad[lo] <= rrad[lo + 1] else lo + 1
    return [(rcx[s], rcy[s])]


def _max_dist(rcx, rcy, rrad, off, margin, regions, x, y):
    fbest = -1.0
    gx = gy = 0.0
    for k in regions:
        qx, qy, d = _region_project(rcx, rcy, rrad, off, margin, k, x, y)
        if d > fbest:
            fbest = d
            if d > 0.0:
                gx = (x - qx) / d
                gy = (y - qy) / d
            else:
                gx = gy = 0.0
    return fbest, gx, gy


def emptiness(rcx, rcy, rrad, off, margin, regions, delta, max_iter):
    """Decide whether the listed regions share a point.

    Minimizes ``f(x) = max_k d(x, S_k)`` with a deep-cut ellipsoid method.
    Every cut keeps the minimizers, so ``f(c) - sqrt(g' P g)`` is a certified
    lower bound on ``min f``. Returns ``(code, residual, lower_bound, wx, wy,
    iterations)`` with code NONEMPTY / EMPTY / AMBIGUOUS.
    """
    sx = sy = 0.0
    cnt = 0
    for k in regions:
        for ax, ay in _region_anchor(rcx, rcy, rrad, off, k):
            sx += ax
            sy += ay
            cnt += 1
    x = sx / cnt
    y = sy / cnt
    f, gx, gy = _max_dist(rcx, rcy, rrad, off, margin, regions, x, y)
    fbest, bx, by = f, x, y
    lb = 0.0 if len(regions) == 1 else -math.inf
    if f <= delta:
        return NONEMPTY, f, max(lb, 0.0), x, y, 0
    # every minimizer lies within f of each region's smallest disk
    radius = math.inf
    for k in regions:
        lo, hi = off[k], off[k + 1]
        s = lo
        for t in range(lo, hi):
            if rrad[t] < rrad[s]:
                s = t
        radius = min(radius, math.hypot(x - rcx[s], y - rcy[s]) + rrad[s] + margin[k])
    radius = 1.01 * (radius + f) + 1e-12
    p11 = radius * radius
    p12 = 0.0
    p22 = p11
    it = 0
    for it in range(1, max_iter + 1):
        if f < fbest:
            fbest, bx, by = f, x, y
        if f <= delta:
            return NONEMPTY, f, max(lb, 0.0), x, y, it
        pgx = p11 * gx + p12 * gy
        pgy = p12 * gx + p22 * gy
        gpg = gx * pgx + gy * pgy
        if gpg <= 0.0:
            break
        s = math.sqrt(gpg)
        lb = max(lb, f - s)
        if lb > 10.0 * delta:
            return EMPTY, fbest, lb, bx, by, it
        if s < 1e-15:
            break
        alpha = (f - fbest) / s
        if alpha >= 1.0:
            break
        tx = pgx / s
        ty = pgy / s
        step = (1.0 + 2.0 * alpha) / 3.0
        x -= step * tx
        y -= step * ty
        fac = 4.0 * (1.0 - alpha * alpha) / 3.0
        beta = 2.0 * (1.0 + 2.0 * alpha) / (3.0 * (1.0 + alpha))
        p11 = fac * (p11 - beta * tx * tx)
        p12 = fac * (p12 - beta * tx * ty)
        p22 = fac * (p22 - beta * ty * ty)
        f, gx, gy = _max_dist(rcx, rcy, rrad, off, margin, regions, x, y)
    if f < fbest:
        fbest, bx, by = f, x, y
    if fbest <= delta:
        return NONEMPTY, fbest, max(lb, 0.0), bx, by, it
    if lb > 10.0 * delta:
        return EMPTY, fbest, lb, bx, by, it
    return AMBIGUOUS, fbest, lb, bx, by, it


def emptiness_batch(rcx, rcy, rrad, off, margin, tuples, delta, max_iter):
    tuples = np.asarray(tuples)
    n = tuples.shape[0]
    codes = np.empty(n, dtype=np.int64)
    resid = np.empty(n)
    lbs = np.empty(n)
    for t in range(n):
        c, f, lb, _, _, _ = emptiness(rcx, rcy, rrad, off, margin,
                                      [int(k) for k in tuples[t]], delta, max_iter)
        codes[t] = c
        resid[t] = f
        lbs[t] = lb
    return codes, resid, lbs


# ---------------------------------------------------------------------------
# separation: min sum_e max(0, |X_j - X_k| - r) over X_j in its disk set


def _fac_project(fcx, fcy, frad, foff, bnd, j, x, y):
    lo, hi = foff[j], foff[j + 1]
    if hi > lo:
        px, py, _ = project_disks(fcx[lo:hi], fcy[lo:hi], frad[lo:hi], x, y)
        return px, py
    dx = x - bnd[0]
    dy = y - bnd[1]
    d = math.hypot(dx, dy)
    if d <= bnd[2]:
        return x, y
    return bnd[0] + bnd[2] * dx / d, bnd[1] + bnd[2] * dy / d


def _fac_support(fcx, fcy, frad, foff, bnd, j, ux, uy):
    lo, hi = foff[j], foff[j + 1]
    if hi > lo:
        return support_disks(fcx[lo:hi], fcy[lo:hi], frad[lo:hi], ux, uy)[0]
    return bnd[0] * ux + bnd[1] * uy + bnd[2] * math.hypot(ux, uy)


def _link_value(X, ej, ek, r):
    tot = 0.0
    for e in range(len(ej)):
        j, k = ej[e], ek[e]
        d = math.hypot(X[2 * j] - X[2 * k], X[2 * j + 1] - X[2 * k + 1])
        if d > r:
            tot += d - r
    return tot


def _smoothed(X, ej, ek, r, mu, G, U):
    """Huber-smoothed link objective; fills gradient G and dual vectors U."""
    for t in range(len(G)):
        G[t] = 0.0
    val = 0.0
    for e in range(len(ej)):
        j, k = ej[e], ek[e]
        dx = X[2 * j] - X[2 * k]
        dy = X[2 * j + 1] - X[2 * k + 1]
        d = math.hypot(dx, dy)
        t = d - r
        if t <= 0.0 or d == 0.0:
            U[2 * e] = 0.0
            U[2 * e + 1] = 0.0
            continue
        if t <= mu:
            val += t * t / (2.0 * mu)
            c = t / mu
        else:
            val += t - 0.5 * mu
            c = 1.0
        ux = c * dx / d
        uy = c * dy / d
        U[2 * e] = ux
        U[2 * e + 1] = uy
        G[2 * j] += ux
        G[2 * j + 1] += uy
        G[2 * k] -= ux
        G[2 * k + 1] -= uy
    return val


def _dual_bound(fcx, fcy, frad, foff, bnd, U, ej, ek, r, p):
    # rho >= -r sum|u_e| - sum_j sigma_j(-(D^T u)_j) for any |u_e| <= 1
    gx = [0.0] * p
    gy = [0.0] * p
    tot = 0.0
    for e in range(len(ej)):
        j, k = ej[e], ek[e]
        ux, uy = U[2 * e], U[2 * e + 1]
        tot -= r * math.hypot(ux, uy)
        gx[j] += ux
        gy[j] += uy
        gx[k] -= ux
        gy[k] -= uy
    for j in range(p):
        if gx[j] != 0.0 or gy[j] != 0.0:
            tot -= _fac_support(fcx, fcy, frad, foff, bnd, j, -gx[j], -gy[j])
    return tot


def rho_solve(fcx, fcy, frad, foff, bnd, ej, ek, r, x0, sep_tol, decide_only, max_iter):
    """Minimize total link slack over the facilities' coverage sets.

    Accelerated projected gradient on a Huber smoothing of the slack, with
    the smoothing parameter decreasing in stages. Any iterate is feasible for
    coverage, so its true slack is an upper bound; dual vectors give a
    certified lower bound. Returns ``(X, rho, lower_bound, converged, iters)``
    with X a flat ``[x1, y1, x2, y2, ...]`` list.
    """
    p = len(x0) // 2
    ne = len(ej)
    X = [0.0] * (2 * p)
    for j in range(p):
        X[2 * j], X[2 * j + 1] = _fac_project(fcx, fcy, frad, foff, bnd, j, x0[2 * j], x0[2 * j + 1])
    if ne == 0:
        return X, 0.0, 0.0, True, 0
    deg = [0] * p
    for e in range(ne):
        deg[ej[e]] += 1
        deg[ek[e]] += 1
    dmax = max(deg)
    ub = _link_value(X, ej, ek, r)
    best = list(X)
    lb = 0.0
    target = sep_tol if decide_only else 1e-3 * sep_tol
    if ub <= target:
        return best, ub, lb, True, 0
    scale = r + max(frad) if len(frad) else r + bnd[2]
    scale = max(scale, 1e-9)
    mu = 0.1 * scale
    mu_min = 1e-10 * scale
    G = [0.0] * (2 * p)
    U = [0.0] * (2 * ne)
    Y = list(X)
    tk = 1.0
    it = 0
    stage_it = 0
    lmax = 2.0 * dmax / mu
    L = lmax
    fprev = _smoothed(X, ej, ek, r, mu, G, U)
    converged = False
    last_gain = 0
    while it < max_iter:
        it += 1
        stage_it += 1
        fy = _smoothed(Y, ej, ek, r, mu, G, U)
        Gy = list(G)
        # backtracking on the local curvature, never above the global bound
        L = max(0.5 * L, 1e-3 * lmax * mu / scale)
        while True:
            Xn = [0.0] * (2 * p)
            for j in range(p):
                Xn[2 * j], Xn[2 * j + 1] = _fac_project(
                    fcx, fcy, frad, foff, bnd, j,
                    Y[2 * j] - Gy[2 * j] / L, Y[2 * j + 1] - Gy[2 * j + 1] / L)
            fn = _smoothed(Xn, ej, ek, r, mu, G, U)
            lin = 0.0
            sq = 0.0
            for t in range(2 * p):
                dt = Xn[t] - Y[t]
                lin += Gy[t] * dt
                sq += dt * dt
            if L >= lmax or fn <= fy + lin + 0.5 * L * sq + 1e-15 * abs(fy):
                break
            L = min(2.0 * L, lmax)
        tn = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * tk * tk))
        if fn > fprev:
            tk = 1.0
            Y = list(Xn)
        else:
            mom = (tk - 1.0) / tn
            Y = [Xn[t] + mom * (Xn[t] - X[t]) for t in range(2 * p)]
            tk = tn
        X = Xn
        fprev = fn
        val = _link_value(X, ej, ek, r)
        if val < ub:
            if val < ub - 1e-12 * (1.0 + ub):
                last_gain = it
            ub = val
            best = list(X)
        if ub <= target:
            converged = True
            break
        if it % 10 == 0 or stage_it == 1:
            lb = max(lb, _dual_bound(fcx, fcy, frad, foff, bnd, U, ej, ek, r, p))
            if decide_only and lb > sep_tol:
                converged = True
                break
            if ub - lb <= 1e-9 + 1e-8 * ub:
                converged = True
                break
            if it - last_gain >= 5000 and mu <= mu_min:
                converged = ub - lb <= 1e-6 * (1.0 + ub)
                break
            if mu > mu_min and (fn - lb <= ne * mu or stage_it >= 4000):
                mu *= 0.1
                lmax = 2.0 * dmax / mu
                stage_it = 0
                tk = 1.0
                Y = list(X)
                fprev = _smoothed(X, ej, ek, r, mu, G, U)
    return best, ub, max(lb, 0.0), converged, it
