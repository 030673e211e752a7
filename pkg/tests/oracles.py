"""Independent reference computations for the tests.

These use scipy directly (``linprog``, ``ConvexHull``) or brute force and
do not go through the package's own LP layer or set operations.
"""

import itertools

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull


def zono_factor_member(c, G, x, tol=1e-9, A=None, b=None):
    """Whether ``x = c + G a`` for some ``a`` in the box (and ``A a = b``), by a direct linprog feasibility LP."""
    c = np.asarray(c, float)
    G = np.asarray(G, float).reshape(c.size, -1)
    g = G.shape[1]
    if g == 0:
        return bool(np.linalg.norm(np.asarray(x) - c, np.inf) <= tol)
    # slack s >= |G a - (x - c)| elementwise, minimise max slack
    n = c.size
    obj = np.zeros(g + 1)
    obj[-1] = 1.0
    A_ub = np.block([[G, -np.ones((n, 1))], [-G, -np.ones((n, 1))]])
    r = np.asarray(x, float) - c
    b_ub = np.concatenate([r, -r])
    A_eq = b_eq = None
    if A is not None and np.size(A):
        A_eq = np.hstack([np.atleast_2d(A), np.zeros((np.atleast_2d(A).shape[0], 1))])
        b_eq = b
    res = linprog(obj, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=[(-1, 1)] * g + [(0, None)], method="highs")
    return res.status == 0 and res.fun <= tol


def zono_vertices(c, G):
    """Vertices of a zonotope by enumerating all sign vectors and taking the convex hull (``n >= 2``)."""
    c = np.asarray(c, float)
    G = np.asarray(G, float)
    signs = np.array(list(itertools.product([-1.0, 1.0], repeat=G.shape[1])))
    P = c + signs @ G.T
    try:
        hull = ConvexHull(P)
    except Exception:
        return np.unique(P, axis=0)
    return P[hull.vertices]


def hrep_vertices(C, d):
    """Vertices of a bounded ``{x : C x <= d}`` by testing every ``n``-subset of rows."""
    C = np.asarray(C, float)
    d = np.asarray(d, float)
    m, n = C.shape
    pts = []
    for idx in itertools.combinations(range(m), n):
        M = C[list(idx)]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, d[list(idx)])
        if np.all(C @ x <= d + 1e-9 * (1 + np.abs(d))):
            pts.append(x)
    return np.array(pts).reshape(-1, n)


def hull_l1_distance(V1, V2):
    """``min ||x - y||_1`` over ``x in conv(V1)``, ``y in conv(V2)``, from convex weights on both vertex sets."""
    V1 = np.atleast_2d(V1)
    V2 = np.atleast_2d(V2)
    m1, m2, n = V1.shape[0], V2.shape[0], V1.shape[1]
    # variables [w1, w2, s]
    obj = np.concatenate([np.zeros(m1 + m2), np.ones(n)])
    I = np.eye(n)
    A_ub = np.block([[V1.T, -V2.T, -I], [-V1.T, V2.T, -I]])
    b_ub = np.zeros(2 * n)
    A_eq = np.zeros((2, m1 + m2 + n))
    A_eq[0, :m1] = 1
    A_eq[1, m1 : m1 + m2] = 1
    res = linprog(obj, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1, 1], bounds=[(0, None)] * (m1 + m2 + n), method="highs")
    assert res.status == 0
    return float(res.fun)


def sampled_hausdorff(P, Q):
    """Hausdorff distance between two finite point clouds."""
    P = np.atleast_2d(P)
    Q = np.atleast_2d(Q)
    D = np.linalg.norm(P[:, None, :] - Q[None, :, :], axis=2)
    return max(D.min(axis=1).max(), D.min(axis=0).max())


def point_to_hull_distance(points, V):
    """Euclidean distance of each point to ``conv(V)`` (2D), from the hull edges."""
    V = np.atleast_2d(V)
    hull = ConvexHull(V)
    W = V[hull.vertices]
    out = np.empty(len(points))
    eqs = hull.equations
    for k, p in enumerate(np.atleast_2d(points)):
        if np.all(eqs[:, :2] @ p + eqs[:, 2] <= 1e-12):
            out[k] = 0.0
            continue
        best = np.inf
        for a, b in zip(W, np.roll(W, -1, axis=0)):
            ab = b - a
            t = np.clip((p - a) @ ab / (ab @ ab), 0.0, 1.0)
            best = min(best, np.linalg.norm(p - (a + t * ab)))
        out[k] = best
    return out


def polygon_distance(points, V):
    """Euclidean distance of each point to the convex polygon ``conv(V)`` (vectorised over points)."""
    points = np.atleast_2d(points)
    V = np.atleast_2d(V)
    if V.shape[0] >= 3:
        try:
            V = V[ConvexHull(V).vertices]
        except Exception:
            pass
    A = V
    B = np.roll(V, -1, axis=0)
    AB = B - A
    L2 = np.maximum((AB * AB).sum(axis=1), 1e-300)
    AP = points[:, None, :] - A[None, :, :]
    t = np.clip((AP * AB[None]).sum(axis=2) / L2, 0.0, 1.0)
    D = np.linalg.norm(AP - t[..., None] * AB[None], axis=2).min(axis=1)
    if V.shape[0] >= 3:
        cross = AB[None, :, 0] * AP[..., 1] - AB[None, :, 1] * AP[..., 0]
        inside = np.all(cross >= -1e-12, axis=1) | np.all(cross <= 1e-12, axis=1)
        D[inside] = 0.0
    return D


def lincomb_distance(points, c1, G1, c2, G2, num_lambda=401):
    """Distance of points to ``{l (c1 + G1 a) + (1 - l)(c2 + G2 a)}`` (2D).

    For fixed ``l`` the set is a zonotope; the minimum over a ``l`` grid is
    an upper estimate of the exact distance.
    """
    best = np.full(len(points), np.inf)
    for lam in np.linspace(0.0, 1.0, num_lambda):
        V = zono_vertices(lam * c1 + (1 - lam) * c2, lam * G1 + (1 - lam) * G2)
        best = np.minimum(best, polygon_distance(points, V))
    return best
