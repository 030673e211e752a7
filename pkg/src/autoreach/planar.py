"""Exact operations on convex polygons for two-dimensional sets.

Two-dimensional zonotopes with thousands of generators are common in the
adaptive algorithm; these routines work on their polygons directly in
``O(m log m)`` (or ``O(m)`` for pre-sorted generators) instead of solving
linear programs.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .sets import Polytope, Zonotope


def _upper_half(G: np.ndarray) -> np.ndarray:
    """Generators flipped into the half-plane ``y > 0`` (or ``y = 0, x > 0``)."""
    flip = (G[1] < 0) | ((G[1] == 0) & (G[0] < 0))
    return np.where(flip, -G, G)


def generator_angles(G: np.ndarray) -> np.ndarray:
    H = _upper_half(G)
    return np.arctan2(H[1], H[0])


def polygon_from_sorted(c: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Vertices (counter-clockwise) of ``<c, G>`` for upper-half generators sorted by angle."""
    G = G[:, np.any(G != 0.0, axis=0)]
    if G.shape[1] == 0:
        return c[None, :].copy()
    start = c - G.sum(axis=1)
    steps = np.hstack([2.0 * G, -2.0 * G])
    pts = start + np.cumsum(steps, axis=1).T
    return np.vstack([start, pts[:-1]])


def zonotope_polygon(Z: Zonotope) -> np.ndarray:
    """Vertices (counter-clockwise, possibly with collinear points) of a 2D zonotope."""
    if Z.dim != 2:
        raise ValueError("zonotope_polygon needs a two-dimensional zonotope")
    G = _upper_half(Z.generators)
    order = np.argsort(np.arctan2(G[1], G[0]), kind="stable")
    return polygon_from_sorted(Z.center, G[:, order])


def polygon_halfspaces(V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Outward unit normals and offsets of the edges of a counter-clockwise polygon.

    Edges shorter than ``1e-12`` times the polygon extent are dropped: they
    come from negligible generators, and their direction is rounding noise.
    The normals come out sorted by angle (up to a cyclic shift).
    """
    E = np.roll(V, -1, axis=0) - V
    L = np.hypot(E[:, 0], E[:, 1])
    extent = float(np.ptp(V, axis=0).max()) if V.shape[0] else 0.0
    keep = L > 1e-12 * extent
    E, L, P = E[keep], L[keep], V[keep]
    N = np.column_stack([E[:, 1], -E[:, 0]]) / L[:, None]
    return N, np.einsum("ij,ij->i", N, P)


def halfplane_polygon(N: np.ndarray, d: np.ndarray, interior: np.ndarray) -> np.ndarray:
    """Vertices of ``{x : N x <= d}`` given a strictly interior point; rows of ``N`` sorted by angle."""
    off = d - N @ interior
    if np.any(off <= 0):
        raise ValueError("the given point is not strictly inside")
    return kernels.halfplane_vertices(N, off) + interior


def minkowski_diff_polygon(V: np.ndarray, P: Polytope, center: np.ndarray | None = None):
    """``conv(V) - P`` for a counter-clockwise polygon ``V`` and a 2D polytope ``P``.

    Each edge constraint ``n.x <= d`` becomes ``n.x <= d - h_P(n)``.  When
    ``center`` is given it must be a centre of symmetry of both sets (then
    the difference is empty iff it does not contain ``center``); otherwise
    the polygon's vertex mean is used as the candidate interior point.
    Returns the vertex array, which has zero rows when the difference is
    empty and one or two rows when it is degenerate.
    """
    PV = P.vertices()
    if V.shape[0] < 3:
        # a point or segment: the difference is non-empty only for a point P
        if np.ptp(PV, axis=0).max(initial=0.0) == 0.0 and V.shape[0] == 1:
            return V - PV[0]
        return np.zeros((0, 2))
    N, d = polygon_halfspaces(V)
    d2 = d - (N @ PV.T).max(axis=1)
    x0 = V.mean(axis=0) if center is None else np.asarray(center, dtype=float)
    slack = d2 - N @ x0
    if slack.min() < 0:
        if center is not None:
            return np.zeros((0, 2))
        raise ValueError("interior point not found; pass the centre of symmetry")
    if slack.min() == 0:
        # zero width through x0; x0 itself is a member
        return x0[None, :].copy()
    return kernels.halfplane_vertices(N, slack) + x0


def polygon_contains(V: np.ndarray, points, tol: float = 1e-9) -> np.ndarray:
    """Membership of each point in the convex polygon ``V`` (counter-clockwise)."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if V.shape[0] == 0:
        return np.zeros(P.shape[0], dtype=bool)
    if V.shape[0] < 3:
        # point or segment
        a, b = V[0], V[-1]
        ab = b - a
        L2 = float(ab @ ab)
        t = np.clip(((P - a) @ ab) / L2, 0.0, 1.0) if L2 > 0 else np.zeros(P.shape[0])
        near = a + t[:, None] * ab
        return np.linalg.norm(P - near, axis=1) <= tol
    N, d = polygon_halfspaces(V)
    return np.all(P @ N.T <= d + tol, axis=1)


def polygon_support(V: np.ndarray, h) -> float:
    return float((V @ np.asarray(h, dtype=float)).max())


def sample_polygon(V: np.ndarray, num: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform samples of a convex polygon (triangle fan); degenerate polygons sample their hull."""
    if V.shape[0] == 0:
        raise ValueError("cannot sample an empty polygon")
    if V.shape[0] == 1:
        return np.tile(V[0], (num, 1))
    if V.shape[0] == 2:
        t = rng.uniform(size=(num, 1))
        return V[0] + t * (V[1] - V[0])
    a = V[0]
    B = V[1:-1] - a
    C = V[2:] - a
    area = 0.5 * np.abs(B[:, 0] * C[:, 1] - B[:, 1] * C[:, 0])
    if area.sum() == 0:
        w = rng.dirichlet(np.ones(V.shape[0]), size=num)
        return w @ V
    tri = rng.choice(area.size, size=num, p=area / area.sum())
    u = rng.uniform(size=(num, 2))
    flip = u.sum(axis=1) > 1
    u[flip] = 1 - u[flip]
    return a + u[:, :1] * B[tri] + u[:, 1:] * C[tri]


def clip_polygon(V: np.ndarray, N: np.ndarray, d: np.ndarray) -> np.ndarray:
    """``conv(V)`` intersected with ``{x : N x <= d}`` (Sutherland-Hodgman); zero rows if empty."""
    P = np.asarray(V, dtype=float)
    for a, b in zip(np.atleast_2d(N), np.atleast_1d(d)):
        if P.shape[0] == 0:
            break
        s = P @ a - b
        if np.all(s <= 0):
            continue
        if np.all(s > 0):
            return np.zeros((0, 2))
        q = np.roll(P, -1, axis=0)
        sq = np.roll(s, -1)
        cross = ((s < 0) & (sq > 0)) | ((sq < 0) & (s > 0))
        t = np.where(cross, s / np.where(cross, s - sq, 1.0), 0.0)
        both = np.empty((2 * P.shape[0], 2))
        both[0::2] = P
        both[1::2] = P + t[:, None] * (q - P)
        keep = np.empty(2 * P.shape[0], dtype=bool)
        keep[0::2] = s <= 0
        keep[1::2] = cross
        P = both[keep]
    return P
