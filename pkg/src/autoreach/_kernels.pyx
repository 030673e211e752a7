# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_kernels_py``.

Same contracts, same loop structure; written against raw memoryviews so the
per-candidate cost of the adaptive loop is not dominated by numpy call
overhead on tiny matrices.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow, fabs, fmax, isfinite, ceil, log2, ldexp, INFINITY
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy, memset

cnp.import_array()


cdef inline double _coef(int i) noexcept nogil:
    if i < 2:
        return 0.0
    return pow(<double>i, -i / (i - 1.0)) - pow(<double>i, -1.0 / (i - 1.0))


def curvature_coefficient(int i):
    return _coef(i)


cdef void _matmul_scaled(const double[:, ::1] X, const double[:, ::1] Y, double s,
                         double[:, ::1] out, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t r, c, k
    cdef double acc
    for r in range(n):
        for c in range(n):
            acc = 0.0
            for k in range(n):
                acc += X[r, k] * Y[k, c]
            out[r, c] = acc * s


def expm_tail(M_in, int eta):
    cdef const double[:, ::1] M = np.ascontiguousarray(M_in, dtype=np.float64)
    cdef Py_ssize_t n = M.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] P_arr = np.eye(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] W_arr = np.empty((n, n))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] T_arr
    cdef double[:, ::1] P = P_arr
    cdef double[:, ::1] W = W_arr
    cdef double[:, ::1] T
    cdef double[:, ::1] tmp
    cdef double norm = 0.0, rs, pmax, tmax
    cdef Py_ssize_t r, c
    cdef int i
    for r in range(n):
        rs = 0.0
        for c in range(n):
            rs += M[r, c]
        if rs > norm:
            norm = rs
    for i in range(1, eta + 2):
        _matmul_scaled(P, M, 1.0 / i, W, n)
        tmp = P
        P = W
        W = tmp
    T_arr = np.array(P, copy=True)
    T = T_arr
    i = eta + 1
    while True:
        pmax = 0.0
        tmax = 0.0
        for r in range(n):
            for c in range(n):
                if not isfinite(T[r, c]):
                    return np.full((n, n), np.inf)
                if P[r, c] > pmax:
                    pmax = P[r, c]
                if T[r, c] > tmax:
                    tmax = T[r, c]
        if pmax == 0.0 or (norm < 0.5 * (i + 1) and pmax <= 1e-18 * tmax):
            return T_arr
        i += 1
        _matmul_scaled(P, M, 1.0 / i, W, n)
        tmp = P
        P = W
        W = tmp
        for r in range(n):
            for c in range(n):
                T[r, c] += P[r, c]


def taylor_interval_sums(A_in, double dt, int cap, double rtol):
    cdef const double[:, ::1] A = np.ascontiguousarray(A_in, dtype=np.float64)
    cdef Py_ssize_t n = A.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Adt_arr = np.empty((n, n))
    cdef double[:, ::1] Adt = Adt_arr
    cdef double[:, ::1] P = np.eye(n)
    cdef double[:, ::1] W = np.empty((n, n))
    cdef double[:, ::1] tmp
    cdef cnp.ndarray[cnp.float64_t, ndim=2] lo_arr = np.zeros((n, n))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] hi_arr = np.zeros((n, n))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] ulo_arr, uhi_arr
    cdef double[:, ::1] lo = lo_arr
    cdef double[:, ::1] hi = hi_arr
    cdef double[:, ::1] ulo, uhi
    cdef double prev_norm = 0.0, norm, c, t, m, acc
    cdef Py_ssize_t r, k, q
    cdef int i, j, eta
    cdef bint converged, nonzero
    for r in range(n):
        for k in range(n):
            Adt[r, k] = A[r, k] * dt
    for i in range(1, cap + 1):
        _matmul_scaled(P, Adt, 1.0 / i, W, n)
        tmp = P
        P = W
        W = tmp
        c = _coef(i)
        norm = 0.0
        for r in range(n):
            for k in range(n):
                t = c * P[r, k]
                if t < 0.0:
                    lo[r, k] += t
                else:
                    hi[r, k] += t
                m = fabs(lo[r, k])
                if fabs(hi[r, k]) > m:
                    m = fabs(hi[r, k])
                norm += m * m
        norm = sqrt(norm)
        if not isfinite(norm):
            break
        if norm == 0.0:
            nonzero = False
            for r in range(n):
                for k in range(n):
                    acc = 0.0
                    for q in range(n):
                        acc += P[r, q] * Adt[q, k]
                    if acc != 0.0:
                        nonzero = True
            converged = not nonzero
        else:
            converged = 1.0 - prev_norm / norm <= rtol
        prev_norm = norm
        if converged:
            eta = i
            ulo_arr = np.zeros((n, n))
            uhi_arr = np.zeros((n, n))
            ulo = ulo_arr
            uhi = uhi_arr
            P = np.eye(n)
            for j in range(1, eta + 2):
                if j >= 2:
                    c = _coef(j) * dt / j
                    for r in range(n):
                        for k in range(n):
                            t = c * P[r, k]
                            if t < 0.0:
                                ulo[r, k] += t
                            else:
                                uhi[r, k] += t
                _matmul_scaled(P, Adt, 1.0 / j, W, n)
                tmp = P
                P = W
                W = tmp
            return eta, lo_arr, hi_arr, ulo_arr, uhi_arr
    z = np.zeros((n, n))
    return -1, z, z, z, z


cdef double _norm_vec(double[::1] v, Py_ssize_t n) noexcept nogil:
    cdef double s = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        s += v[i] * v[i]
    return sqrt(s)


cdef inline void _mm(const double* X, const double* Y, double s, double* out, Py_ssize_t n) noexcept nogil:
    """``out = s X Y`` for ``n x n`` row-major matrices (``out`` must not alias)."""
    cdef Py_ssize_t r, c, k
    cdef double acc
    for r in range(n):
        for c in range(n):
            acc = 0.0
            for k in range(n):
                acc += X[r * n + k] * Y[k * n + c]
            out[r * n + c] = acc * s


cdef void _eye(double* X, Py_ssize_t n, double s) noexcept nogil:
    cdef Py_ssize_t r
    memset(X, 0, n * n * sizeof(double))
    for r in range(n):
        X[r * n + r] = s


cdef void _expm_c(const double* X, Py_ssize_t n, double* out, double* P, double* W) noexcept nogil:
    """``e^X`` by scaling and squaring of the Taylor series."""
    cdef double nrm = 0.0, cs, pmax, smax
    cdef Py_ssize_t r, c, q, N = n * n
    cdef int s = 0, i
    cdef double* tmp
    for c in range(n):
        cs = 0.0
        for r in range(n):
            cs += fabs(X[r * n + c])
        if cs > nrm:
            nrm = cs
    if nrm > 0.25:
        s = <int>ceil(log2(nrm / 0.25))
    # P holds the scaled matrix first, then the running term
    for q in range(N):
        W[q] = ldexp(X[q], -s)
    _eye(out, n, 1.0)
    _eye(P, n, 1.0)
    cdef double* Y = <double*>malloc(N * sizeof(double))
    memcpy(Y, W, N * sizeof(double))
    for i in range(1, 40):
        _mm(P, Y, 1.0 / i, W, n)
        tmp = P
        P = W
        W = tmp
        pmax = 0.0
        smax = 0.0
        for q in range(N):
            out[q] += P[q]
            if fabs(P[q]) > pmax:
                pmax = fabs(P[q])
            if fabs(out[q]) > smax:
                smax = fabs(out[q])
        if pmax <= 1e-17 * smax:
            break
    for i in range(s):
        _mm(out, out, 1.0, W, n)
        memcpy(out, W, N * sizeof(double))
    free(Y)


cdef double _spectral_norm(const double* D, Py_ssize_t n, Py_ssize_t g, double* M) noexcept nogil:
    """Largest singular value of the ``n x g`` matrix ``D`` (cyclic Jacobi on ``D D^T``)."""
    cdef Py_ssize_t r, c, k, p, q
    cdef double acc, off, theta, t, cth, sth, app, aqq, apq, mrp, mrq, lam
    cdef int sweep
    for r in range(n):
        for c in range(r, n):
            acc = 0.0
            for k in range(g):
                acc += D[r * g + k] * D[c * g + k]
            M[r * n + c] = acc
            M[c * n + r] = acc
    for sweep in range(60):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += M[p * n + q] * M[p * n + q]
        if off == 0.0:
            break
        for p in range(n):
            for q in range(p + 1, n):
                apq = M[p * n + q]
                if apq == 0.0:
                    continue
                app = M[p * n + p]
                aqq = M[q * n + q]
                theta = (aqq - app) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (fabs(theta) + sqrt(theta * theta + 1.0))
                cth = 1.0 / sqrt(t * t + 1.0)
                sth = t * cth
                for r in range(n):
                    mrp = M[r * n + p]
                    mrq = M[r * n + q]
                    M[r * n + p] = cth * mrp - sth * mrq
                    M[r * n + q] = sth * mrp + cth * mrq
                for r in range(n):
                    mrp = M[p * n + r]
                    mrq = M[q * n + r]
                    M[p * n + r] = cth * mrp - sth * mrq
                    M[q * n + r] = sth * mrp + cth * mrq
    lam = 0.0
    for r in range(n):
        if M[r * n + r] > lam:
            lam = M[r * n + r]
    return sqrt(lam)


def expm(X_in):
    """``e^X`` (scaling and squaring of the Taylor series)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] X = np.ascontiguousarray(X_in, dtype=np.float64)
    cdef Py_ssize_t n = X.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n, n))
    cdef double* work = <double*>malloc(2 * n * n * sizeof(double) + 1)
    _expm_c(&X[0, 0] if n else NULL, n, &out[0, 0] if n else NULL, work, work + n * n)
    free(work)
    return out


def spectral_norm(D_in):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] D = np.ascontiguousarray(D_in, dtype=np.float64)
    cdef Py_ssize_t n = D.shape[0], g = D.shape[1]
    if n == 0 or g == 0:
        return 0.0
    cdef double* M = <double*>malloc(n * n * sizeof(double))
    cdef double v = _spectral_norm(&D[0, 0], n, g, M)
    free(M)
    return v


def candidate_errors(A_in, double dt, eAt_in, ch_in, Gh_in, u_in, Gu_in, int cap, double rtol):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] A = np.ascontiguousarray(A_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] eAt = np.ascontiguousarray(eAt_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ch = np.ascontiguousarray(ch_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Gh = np.ascontiguousarray(Gh_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] u = np.ascontiguousarray(u_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Gu = np.ascontiguousarray(Gu_in, dtype=np.float64)
    cdef Py_ssize_t n = A.shape[0], gh = Gh.shape[1], gu = Gu.shape[1], N = n * n
    cdef Py_ssize_t r, c, k
    cdef int i, eta
    cdef double acc, s, mx, e1, e2, eU, err_C, hom
    cdef double* pA = <double*>A.data
    cdef double* pE = <double*>eAt.data
    cdef double* pch = <double*>ch.data
    cdef double* pGh = <double*>Gh.data
    cdef double* pu = <double*>u.data
    cdef double* pGu = <double*>Gu.data

    # outputs: fx_lo, fx_hi, fu_lo, fu_hi, E, expAdt packed in one array
    cdef cnp.ndarray[cnp.float64_t, ndim=3] mats = np.zeros((6, n, n))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rest_arr = np.zeros(n)
    cdef double* xl = <double*>mats.data
    cdef double* xh = xl + N
    cdef double* ul = xl + 2 * N
    cdef double* uh = xl + 3 * N
    cdef double* Em = xl + 4 * N
    cdef double* X = xl + 5 * N
    cdef double* rest = <double*>rest_arr.data

    cdef Py_ssize_t wlen = 8 * N + 3 * n * (gu + gh + 1) + 8 * n + 8
    cdef double* work = <double*>malloc(wlen * sizeof(double))
    cdef double* Adt = work
    cdef double* P = work + N
    cdef double* W = work + 2 * N
    cdef double* T = work + 3 * N
    cdef double* absAdt = work + 4 * N
    cdef double* M = work + 5 * N
    cdef double* S = work + 8 * N
    cdef double* AG = S + n * gu
    cdef double* D = AG + n * gu
    cdef double* vec = D + n * gh + n
    cdef double* tmp
    cdef double prev_norm = 0.0, norm, cc, t, m, pmax, tmax, rs, nrm1
    cdef bint converged, nonzero, ok
    try:
        for k in range(N):
            Adt[k] = pA[k] * dt
            absAdt[k] = fabs(Adt[k])
        # curvature interval sums and truncation order
        eta = -1
        _eye(P, n, 1.0)
        for i in range(1, cap + 1):
            _mm(P, Adt, 1.0 / i, W, n)
            tmp = P
            P = W
            W = tmp
            cc = _coef(i)
            norm = 0.0
            for k in range(N):
                t = cc * P[k]
                if t < 0.0:
                    xl[k] += t
                else:
                    xh[k] += t
                m = fabs(xl[k])
                if fabs(xh[k]) > m:
                    m = fabs(xh[k])
                norm += m * m
            norm = sqrt(norm)
            if not isfinite(norm):
                break
            if norm == 0.0:
                _mm(P, Adt, 1.0, W, n)
                nonzero = False
                for k in range(N):
                    if W[k] != 0.0:
                        nonzero = True
                converged = not nonzero
            else:
                converged = 1.0 - prev_norm / norm <= rtol
            prev_norm = norm
            if converged:
                eta = i
                break
        if eta < 0:
            return (-1, INFINITY, INFINITY, INFINITY, INFINITY) + (None,) * 7
        _eye(P, n, 1.0)
        for i in range(1, eta + 2):
            if i >= 2:
                cc = _coef(i) * dt / i
                for k in range(N):
                    t = cc * P[k]
                    if t < 0.0:
                        ul[k] += t
                    else:
                        uh[k] += t
            _mm(P, Adt, 1.0 / i, W, n)
            tmp = P
            P = W
            W = tmp

        # remainder of the exponential series, summed term by term
        nrm1 = 0.0
        for r in range(n):
            rs = 0.0
            for c in range(n):
                rs += absAdt[r * n + c]
            if rs > nrm1:
                nrm1 = rs
        _eye(P, n, 1.0)
        for i in range(1, eta + 2):
            _mm(P, absAdt, 1.0 / i, W, n)
            tmp = P
            P = W
            W = tmp
        memcpy(Em, P, N * sizeof(double))
        i = eta + 1
        ok = True
        while True:
            pmax = 0.0
            tmax = 0.0
            for k in range(N):
                if not isfinite(Em[k]):
                    ok = False
                if P[k] > pmax:
                    pmax = P[k]
                if Em[k] > tmax:
                    tmax = Em[k]
            if not ok:
                return (-1, INFINITY, INFINITY, INFINITY, INFINITY) + (None,) * 7
            if pmax == 0.0 or (nrm1 < 0.5 * (i + 1) and pmax <= 1e-18 * tmax):
                break
            i += 1
            _mm(P, absAdt, 1.0 / i, W, n)
            tmp = P
            P = W
            W = tmp
            for k in range(N):
                Em[k] += P[k]
        for k in range(N):
            xl[k] -= Em[k]
            xh[k] += Em[k]
            ul[k] -= Em[k] * dt
            uh[k] += Em[k] * dt

        # err of the curvature set
        for r in range(n):
            s = fabs(pch[r])
            for c in range(gh):
                s += fabs(pGh[r * gh + c])
            vec[r] = s
        for r in range(n):
            acc = 0.0
            s = 0.0
            for k in range(n):
                acc += 0.5 * (xl[r * n + k] + xh[r * n + k]) * pch[k] + 0.5 * (ul[r * n + k] + uh[r * n + k]) * pu[k]
                s += 0.5 * (xh[r * n + k] - xl[r * n + k]) * vec[k] + 0.5 * (uh[r * n + k] - ul[r * n + k]) * fabs(pu[k])
            for c in range(gh):
                mx = 0.0
                for k in range(n):
                    mx += 0.5 * (xl[r * n + k] + xh[r * n + k]) * pGh[k * gh + c]
                s += fabs(mx)
            vec[n + r] = fabs(acc) + s
        err_C = 0.0
        for r in range(n):
            err_C += vec[n + r] * vec[n + r]
        err_C = sqrt(err_C)

        # e^{A dt} and the generator term of the affine error
        _expm_c(Adt, n, X, P, W)
        hom = 0.0
        if gh > 0:
            for r in range(n):
                for c in range(gh):
                    acc = 0.0
                    for k in range(n):
                        acc += X[r * n + k] * pGh[k * gh + c]
                    D[r * gh + c] = acc - pGh[r * gh + c]
            hom = _spectral_norm(D, n, gh, M)

        # input-solution errors; vec[0:n] = row sums of |Gu|, vec[n:2n] = box, vec[2n:3n] = |eAt| box
        for r in range(n):
            s = 0.0
            for c in range(gu):
                s += fabs(pGu[r * gu + c])
            vec[r] = s
        for r in range(n):
            s = 0.0
            for k in range(n):
                s += Em[r * n + k] * dt * vec[k]
            vec[n + r] = s
        for r in range(n):
            s = 0.0
            for k in range(n):
                s += fabs(pE[r * n + k]) * vec[n + k]
            vec[2 * n + r] = s
            rest[r] = 0.0
        memset(S, 0, n * gu * sizeof(double))
        _eye(P, n, dt)
        for i in range(1, eta + 1):
            _mm(P, Adt, 1.0 / (i + 1), W, n)
            tmp = P
            P = W
            W = tmp
            for r in range(n):
                for c in range(gu):
                    acc = 0.0
                    for k in range(n):
                        acc += P[r * n + k] * pGu[k * gu + c]
                    AG[r * gu + c] = acc
                    S[r * gu + c] += acc
            for r in range(n):
                s = 0.0
                for c in range(gu):
                    acc = 0.0
                    for k in range(n):
                        acc += pE[r * n + k] * AG[k * gu + c]
                    s += fabs(acc)
                rest[r] += s
        e1 = 0.0
        e2 = 0.0
        eU = 0.0
        for r in range(n):
            rest[r] += vec[2 * n + r]
            acc = 0.0
            s = 0.0
            for c in range(gu):
                mx = 0.0
                t = 0.0
                for k in range(n):
                    mx += pE[r * n + k] * S[k * gu + c]
                    t += pE[r * n + k] * (dt * pGu[k * gu + c])
                acc += fabs(mx)
                s += fabs(t)
            e1 += (acc + vec[2 * n + r]) ** 2
            e2 += rest[r] ** 2
            eU += (s + rest[r]) ** 2
        return (eta, err_C, sqrt(e1) + sqrt(e2), sqrt(eU), hom, rest_arr,
                mats[5], mats[0], mats[1], mats[2], mats[3], mats[4])
    finally:
        free(work)


def halfplane_vertices(H_in, d_in):
    """Vertices (counter-clockwise) of ``{x : H x <= d}`` for rows of ``H`` sorted by angle.

    The origin must be strictly inside (all ``d > 0``).  The kept halfplanes
    are the convex-hull vertices of the points ``H_i / d_i`` (polar duality),
    found by a Graham scan started at the farthest point.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2] H = np.ascontiguousarray(H_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] d = np.ascontiguousarray(d_in, dtype=np.float64)
    cdef Py_ssize_t m = H.shape[0], i, j, k, top = 0, start = 0, a, b
    cdef double best = -1.0, r, qx, qy, ax, ay, bx, by, cross, det
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out
    if m < 3:
        return np.zeros((0, 2))
    cdef double* px = <double*>malloc(m * sizeof(double))
    cdef double* py = <double*>malloc(m * sizeof(double))
    cdef Py_ssize_t* st = <Py_ssize_t*>malloc((m + 1) * sizeof(Py_ssize_t))
    try:
        for i in range(m):
            px[i] = H[i, 0] / d[i]
            py[i] = H[i, 1] / d[i]
            r = px[i] * px[i] + py[i] * py[i]
            if r > best:
                best = r
                start = i
        for k in range(m + 1):
            i = (start + k) % m
            qx = px[i]
            qy = py[i]
            while top >= 2:
                a = st[top - 2]
                b = st[top - 1]
                ax = px[b] - px[a]
                ay = py[b] - py[a]
                bx = qx - px[b]
                by = qy - py[b]
                cross = ax * by - ay * bx
                if cross > 0.0:
                    break
                top -= 1
            if k < m:
                st[top] = i
                top += 1
        out = np.empty((top, 2))
        for k in range(top):
            a = st[k]
            b = st[(k + 1) % top]
            det = H[a, 0] * H[b, 1] - H[a, 1] * H[b, 0]
            out[k, 0] = (d[a] * H[b, 1] - d[b] * H[a, 1]) / det
            out[k, 1] = (H[a, 0] * d[b] - H[b, 0] * d[a]) / det
        return out
    finally:
        free(px)
        free(py)
        free(st)


def shrunk_zonotope_polygon(G_in, double r):
    """Vertices of ``<0, G>`` minus the l1-ball of radius ``r``, relative to the centre; ``None`` if empty.

    ``G`` holds generators in the upper half-plane sorted by angle.  Returns
    a ``(0, 2)`` array when the difference is the centre alone.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2] G = np.ascontiguousarray(G_in, dtype=np.float64)
    cdef Py_ssize_t g = G.shape[1], m = 0, i, j
    cdef double vx = 0.0, vy = 0.0, gx, gy, L, nx, ny, s, smin = INFINITY
    cdef cnp.ndarray[cnp.float64_t, ndim=2] H = np.empty((2 * g, 2))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] d = np.empty(2 * g)
    for j in range(g):
        vx -= G[0, j]
        vy -= G[1, j]
    for j in range(g):
        gx = G[0, j]
        gy = G[1, j]
        L = sqrt(gx * gx + gy * gy)
        if L == 0.0:
            continue
        nx = gy / L
        ny = -gx / L
        s = nx * vx + ny * vy - r * fmax(fabs(nx), fabs(ny))
        H[m, 0] = nx
        H[m, 1] = ny
        d[m] = s
        if s < smin:
            smin = s
        m += 1
        vx += 2.0 * gx
        vy += 2.0 * gy
    if m == 0 or smin < 0.0:
        return None
    if smin == 0.0:
        return np.zeros((0, 2))
    for i in range(m):
        H[m + i, 0] = -H[i, 0]
        H[m + i, 1] = -H[i, 1]
        d[m + i] = d[i]
    return halfplane_vertices(H[: 2 * m], d[: 2 * m])
