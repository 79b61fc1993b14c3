# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled numerical kernels; twin of ``_pykernels`` with the same signatures."""
from libc.math cimport sqrt, hypot, fabs, INFINITY
from libc.stdlib cimport malloc, free

import numpy as np
cimport numpy as cnp

cnp.import_array()

GEOM_TOL = 1e-12
cdef double TOL = 1e-12

NONEMPTY = 0
EMPTY = 1
AMBIGUOUS = 2


cdef inline int _circle_points(double x1, double y1, double r1, double x2, double y2,
                               double r2, double* ox, double* oy) nogil:
    cdef double dx = x2 - x1, dy = y2 - y1
    cdef double d = hypot(dx, dy)
    cdef double a, h2, ux, uy, mx, my, h
    if d == 0.0:
        return 0
    if d > r1 + r2 + TOL or d < fabs(r1 - r2) - TOL:
        return 0
    a = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d)
    h2 = r1 * r1 - a * a
    ux = dx / d
    uy = dy / d
    mx = x1 + a * ux
    my = y1 + a * uy
    if h2 <= 0.0:
        ox[0] = mx
        oy[0] = my
        return 1
    h = sqrt(h2)
    ox[0] = mx - h * uy
    oy[0] = my + h * ux
    ox[1] = mx + h * uy
    oy[1] = my - h * ux
    return 2


cdef inline bint _in_all(const double* cx, const double* cy, const double* rad, int m,
                         double x, double y, int skip) nogil:
    cdef int k
    for k in range(m):
        if k == skip:
            continue
        if hypot(x - cx[k], y - cy[k]) > rad[k] + TOL:
            return False
    return True


cdef bint _project(const double* cx, const double* cy, const double* rad, int m,
                   double x, double y, double* px, double* py) nogil:
    cdef int i, j, n, t
    cdef double best = INFINITY, bx = 0.0, by = 0.0
    cdef double dx, dy, d, qx, qy, dist
    cdef double ox[2]
    cdef double oy[2]
    if _in_all(cx, cy, rad, m, x, y, -1):
        px[0] = x
        py[0] = y
        return True
    for i in range(m):
        dx = x - cx[i]
        dy = y - cy[i]
        d = hypot(dx, dy)
        if d > rad[i]:
            qx = cx[i] + rad[i] * dx / d
            qy = cy[i] + rad[i] * dy / d
            if _in_all(cx, cy, rad, m, qx, qy, i):
                dist = hypot(x - qx, y - qy)
                if dist < best:
                    best = dist
                    bx = qx
                    by = qy
    for i in range(m):
        for j in range(i + 1, m):
            n = _circle_points(cx[i], cy[i], rad[i], cx[j], cy[j], rad[j], ox, oy)
            for t in range(n):
                if _in_all(cx, cy, rad, m, ox[t], oy[t], -1):
                    dist = hypot(x - ox[t], y - oy[t])
                    if dist < best:
                        best = dist
                        bx = ox[t]
                        by = oy[t]
    if best == INFINITY:
        px[0] = x
        py[0] = y
        return False
    px[0] = bx
    py[0] = by
    return True


cdef bint _support(const double* cx, const double* cy, const double* rad, int m,
                   double ux, double uy, double* val, double* px, double* py) nogil:
    cdef int i, j, n, t
    cdef double nu = hypot(ux, uy), ex, ey, qx, qy, v
    cdef double best = -INFINITY, bx = 0.0, by = 0.0
    cdef double ox[2]
    cdef double oy[2]
    cdef bint found
    if nu == 0.0:
        found = _project(cx, cy, rad, m, cx[0], cy[0], px, py)
        val[0] = 0.0
        return found
    ex = ux / nu
    ey = uy / nu
    for i in range(m):
        qx = cx[i] + rad[i] * ex
        qy = cy[i] + rad[i] * ey
        if _in_all(cx, cy, rad, m, qx, qy, i):
            v = ux * qx + uy * qy
            if v > best:
                best = v
                bx = qx
                by = qy
    for i in range(m):
        for j in range(i + 1, m):
            n = _circle_points(cx[i], cy[i], rad[i], cx[j], cy[j], rad[j], ox, oy)
            for t in range(n):
                if _in_all(cx, cy, rad, m, ox[t], oy[t], -1):
                    v = ux * ox[t] + uy * oy[t]
                    if v > best:
                        best = v
                        bx = ox[t]
                        by = oy[t]
    if best == -INFINITY:
        val[0] = 0.0
        px[0] = 0.0
        py[0] = 0.0
        return False
    val[0] = best
    px[0] = bx
    py[0] = by
    return True


def circle_points(double x1, double y1, double r1, double x2, double y2, double r2):
    """Boundary intersection points of two circles (0, 1 or 2 of them)."""
    cdef double ox[2]
    cdef double oy[2]
    cdef int n = _circle_points(x1, y1, r1, x2, y2, r2, ox, oy)
    return [(ox[t], oy[t]) for t in range(n)]


def project_disks(const double[::1] cx, const double[::1] cy, const double[::1] rad,
                  double x, double y):
    cdef double px, py
    cdef bint found = _project(&cx[0], &cy[0], &rad[0], rad.shape[0], x, y, &px, &py)
    return px, py, found


def support_disks(const double[::1] cx, const double[::1] cy, const double[::1] rad,
                  double ux, double uy):
    cdef double val, px, py
    cdef bint found = _support(&cx[0], &cy[0], &rad[0], rad.shape[0], ux, uy, &val, &px, &py)
    return val, px, py, found


cdef int _dykstra(const double* cx, const double* cy, const double* rad, int m,
                  double* x, double* y, int max_iter, double tol, double* incx,
                  double* incy) nogil:
    cdef int i, it = 0
    cdef double change, yx, yy, dx, dy, d, nx, ny, nix, niy
    for i in range(m):
        incx[i] = 0.0
        incy[i] = 0.0
    for it in range(1, max_iter + 1):
        change = 0.0
        for i in range(m):
            yx = x[0] + incx[i]
            yy = y[0] + incy[i]
            dx = yx - cx[i]
            dy = yy - cy[i]
            d = sqrt(dx * dx + dy * dy)
            if d > rad[i]:
                nx = cx[i] + rad[i] * dx / d
                ny = cy[i] + rad[i] * dy / d
            else:
                nx = yx
                ny = yy
            nix = yx - nx
            niy = yy - ny
            change += (nix - incx[i]) ** 2 + (niy - incy[i]) ** 2
            change += (nx - x[0]) ** 2 + (ny - y[0]) ** 2
            incx[i] = nix
            incy[i] = niy
            x[0] = nx
            y[0] = ny
        if change < tol * tol:
            break
    return it


def dykstra_disks(const double[::1] cx, const double[::1] cy, const double[::1] rad,
                  double x, double y, int max_iter, double tol):
    cdef int m = rad.shape[0]
    cdef double* buf = <double*> malloc(2 * m * sizeof(double))
    cdef int it
    try:
        it = _dykstra(&cx[0], &cy[0], &rad[0], m, &x, &y, max_iter, tol, buf, buf + m)
    finally:
        free(buf)
    return x, y, it


def dykstra_distance_batch(const double[::1] cx, const double[::1] cy, const double[::1] rad,
                           const double[::1] xs, const double[::1] ys, int max_iter, double tol):
    """Distances and iteration counts; a count equal to ``max_iter`` means no convergence."""
    cdef int m = rad.shape[0], n = xs.shape[0], t
    cdef double x, y
    out = np.empty(n)
    its = np.empty(n, dtype=np.int64)
    cdef double[::1] o = out
    cdef cnp.int64_t[::1] oi = its
    cdef double* buf = <double*> malloc(2 * m * sizeof(double))
    try:
        with nogil:
            for t in range(n):
                x = xs[t]
                y = ys[t]
                oi[t] = _dykstra(&cx[0], &cy[0], &rad[0], m, &x, &y, max_iter, tol, buf, buf + m)
                o[t] = hypot(xs[t] - x, ys[t] - y)
    finally:
        free(buf)
    return out, its


# ---------------------------------------------------------------------------
# regions: intersection of 1-2 disks, enlarged by a margin

cdef double _region_project(const double* rcx, const double* rcy, const double* rrad,
                            const cnp.int64_t* off, const double* margin, long k,
                            double x, double y, double* qx, double* qy) nogil:
    cdef long lo = off[k], hi = off[k + 1]
    cdef double px, py, dx, dy, d, mk
    _project(rcx + lo, rcy + lo, rrad + lo, <int>(hi - lo), x, y, &px, &py)
    dx = x - px
    dy = y - py
    d = hypot(dx, dy)
    mk = margin[k]
    if d <= mk:
        qx[0] = x
        qy[0] = y
        return 0.0
    qx[0] = px + mk * dx / d
    qy[0] = py + mk * dy / d
    return d - mk


def region_distance_batch(const double[::1] rcx, const double[::1] rcy, const double[::1] rrad,
                          const cnp.int64_t[::1] off, const double[::1] margin, long k,
                          const double[::1] xs, const double[::1] ys):
    cdef int n = xs.shape[0], t
    cdef double qx, qy
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for t in range(n):
            o[t] = _region_project(&rcx[0], &rcy[0], &rrad[0], &off[0], &margin[0], k, xs[t],
                                   ys[t], &qx, &qy)
    return out


cdef int _region_anchor(const double* rcx, const double* rcy, const double* rrad,
                        const cnp.int64_t* off, long k, double* ax, double* ay) nogil:
    cdef long lo = off[k], hi = off[k + 1], s
    cdef int n
    if hi - lo == 1:
        ax[0] = rcx[lo]
        ay[0] = rcy[lo]
        return 1
    n = _circle_points(rcx[lo], rcy[lo], rrad[lo], rcx[lo + 1], rcy[lo + 1], rrad[lo + 1], ax, ay)
    if n > 0:
        return n
    s = lo if rrad[lo] <= rrad[lo + 1] else lo + 1
    ax[0] = rcx[s]
    ay[0] = rcy[s]
    return 1


cdef double _max_dist(const double* rcx, const double* rcy, const double* rrad,
                      const cnp.int64_t* off, const double* margin, const cnp.int64_t* regions,
                      int nreg, double x, double y, double* gx, double* gy) nogil:
    cdef double fbest = -1.0, qx, qy, d
    cdef int t
    gx[0] = 0.0
    gy[0] = 0.0
    for t in range(nreg):
        d = _region_project(rcx, rcy, rrad, off, margin, regions[t], x, y, &qx, &qy)
        if d > fbest:
            fbest = d
            if d > 0.0:
                gx[0] = (x - qx) / d
                gy[0] = (y - qy) / d
            else:
                gx[0] = 0.0
                gy[0] = 0.0
    return fbest


cdef int _emptiness(const double* rcx, const double* rcy, const double* rrad,
                    const cnp.int64_t* off, const double* margin, const cnp.int64_t* regions,
                    int nreg, double delta, int max_iter, double* out_f, double* out_lb,
                    double* out_x, double* out_y, int* out_it) nogil:
    cdef double sx = 0.0, sy = 0.0, x, y, f, gx, gy, fbest, bx, by, lb
    cdef double radius, p11, p12, p22, pgx, pgy, gpg, s, alpha, tx, ty, step, fac, beta
    cdef double ax[2]
    cdef double ay[2]
    cdef int cnt = 0, t, n, a, it = 0, code
    cdef long lo, hi, sm, q
    for t in range(nreg):
        n = _region_anchor(rcx, rcy, rrad, off, regions[t], ax, ay)
        for a in range(n):
            sx += ax[a]
            sy += ay[a]
            cnt += 1
    x = sx / cnt
    y = sy / cnt
    f = _max_dist(rcx, rcy, rrad, off, margin, regions, nreg, x, y, &gx, &gy)
    fbest = f
    bx = x
    by = y
    lb = 0.0 if nreg == 1 else -INFINITY
    if f <= delta:
        out_f[0] = f
        out_lb[0] = lb if lb > 0.0 else 0.0
        out_x[0] = x
        out_y[0] = y
        out_it[0] = 0
        return 0
    radius = INFINITY
    for t in range(nreg):
        lo = off[regions[t]]
        hi = off[regions[t] + 1]
        sm = lo
        for q in range(lo, hi):
            if rrad[q] < rrad[sm]:
                sm = q
        s = hypot(x - rcx[sm], y - rcy[sm]) + rrad[sm] + margin[regions[t]]
        if s < radius:
            radius = s
    radius = 1.01 * (radius + f) + 1e-12
    p11 = radius * radius
    p12 = 0.0
    p22 = p11
    code = -1
    for it in range(1, max_iter + 1):
        if f < fbest:
            fbest = f
            bx = x
            by = y
        if f <= delta:
            out_f[0] = f
            out_lb[0] = lb if lb > 0.0 else 0.0
            out_x[0] = x
            out_y[0] = y
            out_it[0] = it
            return 0
        pgx = p11 * gx + p12 * gy
        pgy = p12 * gx + p22 * gy
        gpg = gx * pgx + gy * pgy
        if gpg <= 0.0:
            break
        s = sqrt(gpg)
        if f - s > lb:
            lb = f - s
        if lb > 10.0 * delta:
            code = 1
            break
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
        f = _max_dist(rcx, rcy, rrad, off, margin, regions, nreg, x, y, &gx, &gy)
    out_it[0] = it
    out_lb[0] = lb
    if code == 1:
        out_f[0] = fbest
        out_x[0] = bx
        out_y[0] = by
        return 1
    if f < fbest:
        fbest = f
        bx = x
        by = y
    out_f[0] = fbest
    out_x[0] = bx
    out_y[0] = by
    if fbest <= delta:
        out_lb[0] = lb if lb > 0.0 else 0.0
        return 0
    if lb > 10.0 * delta:
        return 1
    return 2


def emptiness(const double[::1] rcx, const double[::1] rcy, const double[::1] rrad,
              const cnp.int64_t[::1] off, const double[::1] margin,
              const cnp.int64_t[::1] regions, double delta, int max_iter):
    """Decide whether the listed regions share a point (see ``_pykernels``)."""
    cdef double f, lb, wx, wy
    cdef int it, code
    code = _emptiness(&rcx[0], &rcy[0], &rrad[0], &off[0], &margin[0], &regions[0],
                      regions.shape[0], delta, max_iter, &f, &lb, &wx, &wy, &it)
    return code, f, lb, wx, wy, it


def emptiness_batch(const double[::1] rcx, const double[::1] rcy, const double[::1] rrad,
                    const cnp.int64_t[::1] off, const double[::1] margin,
                    const cnp.int64_t[:, ::1] tuples, double delta, int max_iter):
    cdef Py_ssize_t n = tuples.shape[0], t
    cdef int k = tuples.shape[1], it
    cdef double f, lb, wx, wy
    codes = np.empty(n, dtype=np.int64)
    resid = np.empty(n)
    lbs = np.empty(n)
    cdef cnp.int64_t[::1] c = codes
    cdef double[::1] rv = resid
    cdef double[::1] lv = lbs
    if n == 0:
        return codes, resid, lbs
    with nogil:
        for t in range(n):
            c[t] = _emptiness(&rcx[0], &rcy[0], &rrad[0], &off[0], &margin[0], &tuples[t, 0],
                              k, delta, max_iter, &f, &lb, &wx, &wy, &it)
            rv[t] = f
            lv[t] = lb
    return codes, resid, lbs


# ---------------------------------------------------------------------------
# separation: min sum_e max(0, |X_j - X_k| - r) over X_j in its disk set

cdef struct FacSets:
    const double* cx
    const double* cy
    const double* rad
    const cnp.int64_t* off
    double bx
    double by
    double bR


cdef inline void _fac_project(FacSets* fs, int j, double x, double y, double* px,
                              double* py) nogil:
    cdef long lo = fs.off[j], hi = fs.off[j + 1]
    cdef double dx, dy, d
    if hi > lo:
        _project(fs.cx + lo, fs.cy + lo, fs.rad + lo, <int>(hi - lo), x, y, px, py)
        return
    dx = x - fs.bx
    dy = y - fs.by
    d = hypot(dx, dy)
    if d <= fs.bR:
        px[0] = x
        py[0] = y
        return
    px[0] = fs.bx + fs.bR * dx / d
    py[0] = fs.by + fs.bR * dy / d


cdef inline double _fac_support(FacSets* fs, int j, double ux, double uy) nogil:
    cdef long lo = fs.off[j], hi = fs.off[j + 1]
    cdef double val, px, py
    if hi > lo:
        _support(fs.cx + lo, fs.cy + lo, fs.rad + lo, <int>(hi - lo), ux, uy, &val, &px, &py)
        return val
    return fs.bx * ux + fs.by * uy + fs.bR * hypot(ux, uy)


cdef double _link_value(const double* X, const cnp.int64_t* ej, const cnp.int64_t* ek,
                        int ne, double r) nogil:
    cdef double tot = 0.0, d
    cdef int e
    cdef long j, k
    for e in range(ne):
        j = ej[e]
        k = ek[e]
        d = hypot(X[2 * j] - X[2 * k], X[2 * j + 1] - X[2 * k + 1])
        if d > r:
            tot += d - r
    return tot


cdef double _smoothed(const double* X, const cnp.int64_t* ej, const cnp.int64_t* ek, int ne,
                      int p, double r, double mu, double* G, double* U) nogil:
    cdef int t, e
    cdef long j, k
    cdef double val = 0.0, dx, dy, d, s, c, ux, uy
    for t in range(2 * p):
        G[t] = 0.0
    for e in range(ne):
        j = ej[e]
        k = ek[e]
        dx = X[2 * j] - X[2 * k]
        dy = X[2 * j + 1] - X[2 * k + 1]
        d = hypot(dx, dy)
        s = d - r
        if s <= 0.0 or d == 0.0:
            U[2 * e] = 0.0
            U[2 * e + 1] = 0.0
            continue
        if s <= mu:
            val += s * s / (2.0 * mu)
            c = s / mu
        else:
            val += s - 0.5 * mu
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


cdef double _dual_bound(FacSets* fs, const double* U, const cnp.int64_t* ej,
                        const cnp.int64_t* ek, int ne, double r, int p, double* gxy) nogil:
    cdef double tot = 0.0, ux, uy
    cdef int e, j
    cdef long a, b
    for j in range(2 * p):
        gxy[j] = 0.0
    for e in range(ne):
        a = ej[e]
        b = ek[e]
        ux = U[2 * e]
        uy = U[2 * e + 1]
        tot -= r * hypot(ux, uy)
        gxy[2 * a] += ux
        gxy[2 * a + 1] += uy
        gxy[2 * b] -= ux
        gxy[2 * b + 1] -= uy
    for j in range(p):
        if gxy[2 * j] != 0.0 or gxy[2 * j + 1] != 0.0:
            tot -= _fac_support(fs, j, -gxy[2 * j], -gxy[2 * j + 1])
    return tot


def rho_solve(const double[::1] fcx, const double[::1] fcy, const double[::1] frad,
              const cnp.int64_t[::1] foff, bnd, const cnp.int64_t[::1] ej,
              const cnp.int64_t[::1] ek, double r, const double[::1] x0, double sep_tol,
              bint decide_only, int max_iter):
    """Minimize total link slack over the facilities' coverage sets (see ``_pykernels``)."""
    cdef int p = x0.shape[0] // 2, ne = ej.shape[0], n2 = 2 * x0.shape[0] // 2
    cdef FacSets fs
    cdef double dummy = 0.0
    fs.cx = &fcx[0] if fcx.shape[0] > 0 else &dummy
    fs.cy = &fcy[0] if fcy.shape[0] > 0 else &dummy
    fs.rad = &frad[0] if frad.shape[0] > 0 else &dummy
    fs.off = &foff[0]
    fs.bx = bnd[0]
    fs.by = bnd[1]
    fs.bR = bnd[2]
    cdef double* work = <double*> malloc((7 * n2 + 2 * ne + 2) * sizeof(double))
    cdef double* X = work
    cdef double* best = work + n2
    cdef double* Y = work + 2 * n2
    cdef double* Xn = work + 3 * n2
    cdef double* G = work + 4 * n2
    cdef double* Gy = work + 5 * n2
    cdef double* gxy = work + 6 * n2
    cdef double* U = work + 7 * n2
    cdef int j, e, t, it = 0, stage_it = 0, dmax = 0, last_gain = 0
    cdef double ub, lb = 0.0, target, scale, mu, mu_min, tk = 1.0, tn, lmax, L
    cdef double fprev, fy, fn, lin, sq, dt, mom, val, fmax
    cdef bint converged = False
    cdef int* deg
    try:
        for j in range(p):
            _fac_project(&fs, j, x0[2 * j], x0[2 * j + 1], &X[2 * j], &X[2 * j + 1])
        if ne == 0:
            return [X[t] for t in range(n2)], 0.0, 0.0, True, 0
        deg = <int*> malloc(p * sizeof(int))
        for j in range(p):
            deg[j] = 0
        for e in range(ne):
            deg[ej[e]] += 1
            deg[ek[e]] += 1
        for j in range(p):
            if deg[j] > dmax:
                dmax = deg[j]
        free(deg)
        ub = _link_value(X, &ej[0], &ek[0], ne, r)
        for t in range(n2):
            best[t] = X[t]
        target = sep_tol if decide_only else 1e-3 * sep_tol
        if ub <= target:
            return [best[t] for t in range(n2)], ub, 0.0, True, 0
        if frad.shape[0] > 0:
            fmax = frad[0]
            for t in range(frad.shape[0]):
                if frad[t] > fmax:
                    fmax = frad[t]
            scale = r + fmax
        else:
            scale = r + fs.bR
        if scale < 1e-9:
            scale = 1e-9
        mu = 0.1 * scale
        mu_min = 1e-10 * scale
        for t in range(n2):
            Y[t] = X[t]
        lmax = 2.0 * dmax / mu
        L = lmax
        fprev = _smoothed(X, &ej[0], &ek[0], ne, p, r, mu, G, U)
        with nogil:
            while it < max_iter:
                it += 1
                stage_it += 1
                fy = _smoothed(Y, &ej[0], &ek[0], ne, p, r, mu, G, U)
                for t in range(n2):
                    Gy[t] = G[t]
                L = 0.5 * L
                if L < 1e-3 * lmax * mu / scale:
                    L = 1e-3 * lmax * mu / scale
                while True:
                    for j in range(p):
                        _fac_project(&fs, j, Y[2 * j] - Gy[2 * j] / L,
                                     Y[2 * j + 1] - Gy[2 * j + 1] / L, &Xn[2 * j], &Xn[2 * j + 1])
                    fn = _smoothed(Xn, &ej[0], &ek[0], ne, p, r, mu, G, U)
                    lin = 0.0
                    sq = 0.0
                    for t in range(n2):
                        dt = Xn[t] - Y[t]
                        lin += Gy[t] * dt
                        sq += dt * dt
                    if L >= lmax or fn <= fy + lin + 0.5 * L * sq + 1e-15 * fabs(fy):
                        break
                    L = 2.0 * L
                    if L > lmax:
                        L = lmax
                tn = 0.5 * (1.0 + sqrt(1.0 + 4.0 * tk * tk))
                if fn > fprev:
                    tk = 1.0
                    for t in range(n2):
                        Y[t] = Xn[t]
                else:
                    mom = (tk - 1.0) / tn
                    for t in range(n2):
                        Y[t] = Xn[t] + mom * (Xn[t] - X[t])
                    tk = tn
                for t in range(n2):
                    X[t] = Xn[t]
                fprev = fn
                val = _link_value(X, &ej[0], &ek[0], ne, r)
                if val < ub:
                    if val < ub - 1e-12 * (1.0 + ub):
                        last_gain = it
                    ub = val
                    for t in range(n2):
                        best[t] = X[t]
                if ub <= target:
                    converged = True
                    break
                if it % 10 == 0 or stage_it == 1:
                    val = _dual_bound(&fs, U, &ej[0], &ek[0], ne, r, p, gxy)
                    if val > lb:
                        lb = val
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
                        for t in range(n2):
                            Y[t] = X[t]
                        fprev = _smoothed(X, &ej[0], &ek[0], ne, p, r, mu, G, U)
        return [best[t] for t in range(n2)], ub, (lb if lb > 0.0 else 0.0), converged, it
    finally:
        free(work)
