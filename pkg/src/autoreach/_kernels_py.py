"""Pure-numpy implementations of the hot kernels.

These are the reference versions; ``_kernels.pyx`` mirrors them loop for
loop.  Both must return identical results up to floating-point summation
order.
"""

import math

import numpy as np
import scipy.linalg


def curvature_coefficient(i):
    """Lower end of the scalar interval multiplying ``(A dt)^i / i!`` in the curvature terms.

    The interval is ``[c_i dt^i, 0]``; for ``i = 1`` the formula is 0/0 and its
    limit (zero) is used.
    """
    if i < 2:
        return 0.0
    return i ** (-i / (i - 1.0)) - i ** (-1.0 / (i - 1.0))


def expm_tail(M, eta):
    """``sum_{i > eta} M^i / i!`` for an elementwise non-negative matrix ``M``.

    Summed term by term instead of as ``expm(M) - partial_sum`` so small
    remainders are not lost to cancellation.  Returns an all-``inf`` matrix
    when the series overflows.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    norm = float(np.max(np.sum(M, axis=1))) if n else 0.0
    P = np.eye(n)
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, eta + 2):
            P = (P @ M) / i
        tail = P.copy()
        i = eta + 1
        while True:
            if not np.all(np.isfinite(tail)):
                return np.full((n, n), np.inf)
            pmax = float(np.max(P)) if n else 0.0
            tmax = float(np.max(tail)) if n else 0.0
            if pmax == 0.0 or (norm < 0.5 * (i + 1) and pmax <= 1e-18 * tmax):
                return tail
            i += 1
            P = (P @ M) / i
            tail = tail + P


def taylor_interval_sums(A, dt, cap, rtol):
    """Accumulate the interval Taylor sums used by the curvature enclosures.

    Adds ``I_i (A dt)^i / i!`` for ``i = 1, 2, ...`` until the interval
    Frobenius norm of the running sum changes by at most ``rtol``
    (relative), and in lockstep the input-curvature terms
    ``I_i A^{i-1} dt^i / i!`` for ``i = 2 .. eta + 1``.

    Returns ``(eta, fx_lo, fx_hi, fu_lo, fu_hi)``; ``eta = -1`` signals that
    no order up to ``cap`` converged (or the series overflowed).
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    Adt = A * dt
    P = np.eye(n)
    lo = np.zeros((n, n))
    hi = np.zeros((n, n))
    prev_norm = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, cap + 1):
            P = (P @ Adt) / i
            c = curvature_coefficient(i)
            term = c * P
            lo = lo + np.minimum(term, 0.0)
            hi = hi + np.maximum(term, 0.0)
            norm = math.sqrt(float(np.sum(np.maximum(np.abs(lo), np.abs(hi)) ** 2)))
            if not math.isfinite(norm):
                break
            if norm == 0.0:
                # the sum stays zero iff every later term vanishes, i.e. (A dt)^(i+1) == 0
                converged = not np.any(P @ Adt)
            else:
                converged = 1.0 - prev_norm / norm <= rtol
            prev_norm = norm
            if converged:
                eta = i
                fu_lo = np.zeros((n, n))
                fu_hi = np.zeros((n, n))
                Q = np.eye(n)  # (A dt)^(j-1) / (j-1)!
                for j in range(1, eta + 2):
                    if j >= 2:
                        uterm = curvature_coefficient(j) * dt * Q / j
                        fu_lo = fu_lo + np.minimum(uterm, 0.0)
                        fu_hi = fu_hi + np.maximum(uterm, 0.0)
                    Q = (Q @ Adt) / j
                return eta, lo, hi, fu_lo, fu_hi
    z = np.zeros((n, n))
    return -1, z, z, z, z


def expm(X):
    """``e^X`` (scaling and squaring with Pade approximation)."""
    return scipy.linalg.expm(np.asarray(X, dtype=float))


def spectral_norm(D):
    D = np.asarray(D, dtype=float)
    if D.size == 0:
        return 0.0
    return float(np.linalg.norm(D, 2))


def candidate_errors(A, dt, eAt, ch, Gh, u, Gu, cap, rtol):
    """Error terms of one candidate step size, without building any sets.

    Inputs: system matrix ``A``, step ``dt``, ``eAt = e^{A t_k}``, the
    homogeneous time-point set ``<ch, Gh>``, the constant input ``u`` and
    the generators ``Gu`` of the origin-centred input set.

    Returns ``(eta, err_C, e_acc, e_U, hom, rest, expAdt, fx_lo, fx_hi,
    fu_lo, fu_hi, E)``: ``err_C`` is ``err`` of the curvature set,
    ``e_acc``/``e_U`` the accumulating and interval input errors, ``hom``
    the spectral norm of ``(e^{A dt} - I) Gh``, ``rest`` the box radius of
    the higher-order input terms mapped by ``eAt``, ``fx_*``/``fu_*`` the
    bounds of the curvature interval matrices (remainder included) and ``E``
    the remainder bound.  ``eta = -1`` flags a failed order tuning or
    overflow.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    fail = (-1, math.inf, math.inf, math.inf, math.inf) + (None,) * 7
    eta, fxl, fxh, ful, fuh = taylor_interval_sums(A, dt, cap, rtol)
    if eta < 0:
        return fail
    E = expm_tail(np.abs(A) * dt, eta)
    if not np.all(np.isfinite(E)):
        return fail
    fx_lo, fx_hi = fxl - E, fxh + E
    fu_lo, fu_hi = ful - E * dt, fuh + E * dt
    mx, rx = 0.5 * (fx_lo + fx_hi), 0.5 * (fx_hi - fx_lo)
    mu, ru = 0.5 * (fu_lo + fu_hi), 0.5 * (fu_hi - fu_lo)
    habs = np.abs(ch) + np.abs(Gh).sum(axis=1)
    center = mx @ ch + mu @ u
    spread = np.abs(mx @ Gh).sum(axis=1) + rx @ habs + ru @ np.abs(u)
    err_C = float(np.linalg.norm(np.abs(center) + spread))

    expAdt = expm(A * dt)
    hom = spectral_norm((expAdt - np.eye(n)) @ Gh)

    absE = np.abs(eAt)
    box = (E * dt) @ np.abs(Gu).sum(axis=1)
    ebox = absE @ box
    P = dt * np.eye(n)
    S = np.zeros_like(Gu)
    each = np.zeros(n)
    for i in range(1, eta + 1):
        P = P @ (A * dt) / (i + 1)
        AG = P @ Gu
        S = S + AG
        each = each + np.abs(eAt @ AG).sum(axis=1)
    rest = each + ebox
    e1 = float(np.linalg.norm(np.abs(eAt @ S).sum(axis=1) + ebox))
    e2 = float(np.linalg.norm(rest))
    eU = float(np.linalg.norm(np.abs(eAt @ (dt * Gu)).sum(axis=1) + rest))
    return eta, err_C, e1 + e2, eU, hom, rest, expAdt, fx_lo, fx_hi, fu_lo, fu_hi, E


def halfplane_vertices(H, d):
    """Vertices (counter-clockwise) of ``{x : H x <= d}`` for rows of ``H`` sorted by angle.

    The origin must be strictly inside (all ``d > 0``).  The kept halfplanes
    are the convex-hull vertices of the points ``H_i / d_i`` (polar duality),
    found by a Graham scan started at the farthest point.
    """
    H = np.asarray(H, dtype=float)
    d = np.asarray(d, dtype=float)
    m = H.shape[0]
    if m < 3:
        return np.zeros((0, 2))
    P = H / d[:, None]
    start = int(np.argmax(np.einsum("ij,ij->i", P, P)))
    px = P[:, 0].tolist()
    py = P[:, 1].tolist()
    st = []
    for k in range(m + 1):
        i = (start + k) % m
        qx, qy = px[i], py[i]
        while len(st) >= 2:
            a, b = st[-2], st[-1]
            cross = (px[b] - px[a]) * (qy - py[b]) - (py[b] - py[a]) * (qx - px[b])
            if cross > 0.0:
                break
            st.pop()
        if k < m:
            st.append(i)
    a = np.array(st)
    b = np.roll(a, -1)
    det = H[a, 0] * H[b, 1] - H[a, 1] * H[b, 0]
    x = (d[a] * H[b, 1] - d[b] * H[a, 1]) / det
    y = (H[a, 0] * d[b] - H[b, 0] * d[a]) / det
    return np.column_stack([x, y])


def shrunk_zonotope_polygon(G, r):
    """Vertices of ``<0, G>`` minus the l1-ball of radius ``r``, relative to the centre; ``None`` if empty.

    ``G`` holds generators in the upper half-plane sorted by angle.  Returns
    a ``(0, 2)`` array when the difference is the centre alone.
    """
    G = np.asarray(G, dtype=float)
    L = np.hypot(G[0], G[1])
    G, L = G[:, L > 0], L[L > 0]
    if G.shape[1] == 0:
        return None
    N = np.column_stack([G[1], -G[0]]) / L[:, None]
    V = -G.sum(axis=1) + np.cumsum(2.0 * G, axis=1).T - 2.0 * G.T  # start vertex of each edge
    s = np.einsum("ij,ij->i", N, V) - r * np.abs(N).max(axis=1)
    smin = s.min()
    if smin < 0.0:
        return None
    if smin == 0.0:
        return np.zeros((0, 2))
    return halfplane_vertices(np.vstack([N, -N]), np.concatenate([s, s]))
