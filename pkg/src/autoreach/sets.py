"""Set representations and the set operations used by the reachability code.

All sets are immutable values: constructors copy their inputs into read-only
arrays and every operation returns a new object.  Zonotopes with zero
generators (points) are valid everywhere.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .lp import LinearProgram, LPError, is_feasible, solve_lp


class EmptySetError(ValueError):
    pass


def _frozen(a, ndim, name):
    arr = np.array(a, dtype=float)
    if ndim == 1:
        arr = np.atleast_1d(arr)
        if arr.ndim != 1:
            raise ValueError(f"{name} must be a vector, got shape {arr.shape}")
    elif ndim == 2:
        if arr.ndim != 2:
            raise ValueError(f"{name} must be a matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Interval:
    """Axis-aligned box ``[lower, upper]``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _frozen(self.lower, 1, "lower")
        hi = _frozen(self.upper, 1, "upper")
        if lo.shape != hi.shape:
            raise ValueError("lower and upper differ in length")
        if np.any(lo > hi):
            raise ValueError("lower > upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def radius(self) -> np.ndarray:
        return 0.5 * (self.upper - self.lower)

    def volume(self) -> float:
        return float(np.prod(self.upper - self.lower))

    def diameter(self) -> float:
        w = self.upper - self.lower
        return float(math.sqrt(w @ w))

    def contains(self, points, tol=0.0) -> np.ndarray:
        P = np.atleast_2d(points)
        return np.all((P >= self.lower - tol) & (P <= self.upper + tol), axis=1)

    def to_zonotope(self) -> "Zonotope":
        return Zonotope(self.center, np.diag(self.radius))

    def __repr__(self):
        return f"Interval(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


@dataclass(frozen=True, eq=False)
class Zonotope:
    """``{c + G a : a in [-1, 1]^gamma}``."""

    center: np.ndarray
    generators: Optional[np.ndarray] = None

    def __post_init__(self):
        c = _frozen(self.center, 1, "center")
        if self.generators is None or np.size(self.generators) == 0:
            G = np.zeros((c.size, 0))
            G.setflags(write=False)
        else:
            G = _frozen(np.reshape(self.generators, (c.size, -1)) if np.ndim(self.generators) == 1 else self.generators, 2, "generators")
        if G.shape[0] != c.size:
            raise ValueError(f"center has {c.size} entries but generators have {G.shape[0]} rows")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "generators", G)

    @classmethod
    def point(cls, p) -> "Zonotope":
        return cls(p)

    @classmethod
    def _trusted(cls, c: np.ndarray, G: np.ndarray) -> "Zonotope":
        """Wrap freshly computed, finite, correctly shaped arrays without copying or checking."""
        Z = object.__new__(cls)
        c.setflags(write=False)
        G.setflags(write=False)
        object.__setattr__(Z, "center", c)
        object.__setattr__(Z, "generators", G)
        return Z

    @classmethod
    def from_interval(cls, lower, upper) -> "Zonotope":
        return Interval(lower, upper).to_zonotope()

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def num_generators(self) -> int:
        return self.generators.shape[1]

    @property
    def order(self) -> float:
        return self.num_generators / self.dim

    def __matmul__(self, other):
        return NotImplemented

    def __rmatmul__(self, M) -> "Zonotope":
        return linear_map(M, self)

    def __add__(self, other) -> "Zonotope":
        if isinstance(other, Zonotope):
            return minkowski_sum(self, other)
        v = np.asarray(other, dtype=float)
        return Zonotope(self.center + v, self.generators)

    __radd__ = __add__

    def __mul__(self, s: float) -> "Zonotope":
        return Zonotope(s * self.center, s * self.generators)

    __rmul__ = __mul__

    def compact(self, tol: float = 0.0) -> "Zonotope":
        """Drop generators whose entries are all within ``tol`` of zero."""
        keep = np.any(np.abs(self.generators) > tol, axis=0)
        if np.all(keep):
            return self
        return Zonotope(self.center, self.generators[:, keep])

    def box(self) -> Interval:
        return box_enclosure_zono(self)

    def err(self) -> float:
        return err_radius(self)

    def vertices(self) -> np.ndarray:
        """Images of all sign vectors (a superset of the vertices); only for few generators."""
        g = self.num_generators
        if g > 16:
            raise ValueError("vertex enumeration limited to 16 generators")
        if g == 0:
            return self.center[None, :].copy()
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=g)))
        return self.center + signs @ self.generators.T

    def sample(self, num: int, rng: np.random.Generator, boundary_fraction: float = 0.3) -> np.ndarray:
        """Random points of the zonotope; a fraction uses corner factors (+-1)."""
        g = self.num_generators
        if g == 0:
            return np.tile(self.center, (num, 1))
        alpha = rng.uniform(-1.0, 1.0, size=(num, g))
        nb = int(round(boundary_fraction * num))
        if nb:
            alpha[:nb] = rng.choice((-1.0, 1.0), size=(nb, g))
        return self.center + alpha @ self.generators.T

    def membership_residual(self, x) -> float:
        """``min ||G a - (x - c)||_inf`` over the unit box; zero iff ``x`` is in the zonotope."""
        return _factor_residual(self.center, self.generators, None, None, np.asarray(x, dtype=float))

    def contains(self, points, tol: float = 1e-9) -> np.ndarray:
        """Membership of each row of ``points``, decided by LP."""
        P = np.atleast_2d(np.asarray(points, dtype=float))
        return np.array([self.membership_residual(p) <= tol for p in P])

    def halfspaces(self) -> "Polytope":
        """Exact halfspace representation with unit normals (full-dimensional, small ``n``)."""
        return zonotope_halfspaces(self)

    def to_conzono(self) -> "ConstrainedZonotope":
        return ConstrainedZonotope(self.center, self.generators)

    def __repr__(self):
        return f"Zonotope(dim={self.dim}, generators={self.num_generators})"


@dataclass(frozen=True, eq=False)
class ConstrainedZonotope:
    """``{c + G a : A a = b, a in [-1, 1]^gamma}``."""

    center: np.ndarray
    generators: Optional[np.ndarray] = None
    A: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None

    def __post_init__(self):
        Z = Zonotope(self.center, self.generators)
        g = Z.num_generators
        if self.A is None or np.size(self.A) == 0:
            A = np.zeros((0, g))
            b = np.zeros(0)
            A.setflags(write=False)
            b.setflags(write=False)
        else:
            A = _frozen(np.atleast_2d(self.A), 2, "A")
            b = _frozen(self.b, 1, "b")
            if A.shape[1] != g:
                raise ValueError(f"constraint matrix has {A.shape[1]} columns, expected {g}")
            if A.shape[0] != b.size:
                raise ValueError("constraint offset length differs from constraint rows")
        object.__setattr__(self, "center", Z.center)
        object.__setattr__(self, "generators", Z.generators)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def num_generators(self) -> int:
        return self.generators.shape[1]

    @property
    def num_constraints(self) -> int:
        return self.A.shape[0]

    def _factor_lp(self, objective) -> LinearProgram:
        g = self.num_generators
        return LinearProgram(objective, self.A, self.b, lower=-np.ones(g), upper=np.ones(g))

    def is_empty(self) -> bool:
        if self.num_constraints == 0:
            return False
        return not is_feasible(self._factor_lp(np.zeros(self.num_generators)))

    def support(self, direction) -> tuple[float, np.ndarray]:
        """``max d^T x`` over the set and a maximizer."""
        d = np.asarray(direction, dtype=float)
        if self.num_generators == 0:
            if self.num_constraints and np.any(np.abs(self.b) > 1e-12):
                raise EmptySetError("empty constrained zonotope")
            return float(d @ self.center), self.center.copy()
        res = solve_lp(self._factor_lp(self.generators.T @ d), "max")
        if res.status == "infeasible":
            raise EmptySetError("empty constrained zonotope")
        if not res.optimal:
            raise LPError(res.status, "support function")
        return float(d @ self.center + res.value), self.center + self.generators @ res.x

    def box(self) -> Interval:
        return box_enclosure_conzono(self)

    def err(self) -> float:
        return err_radius(self)

    def membership_residual(self, x) -> float:
        return _factor_residual(self.center, self.generators, self.A, self.b, np.asarray(x, dtype=float))

    def contains(self, points, tol: float = 1e-9) -> np.ndarray:
        P = np.atleast_2d(np.asarray(points, dtype=float))
        return np.array([self.membership_residual(p) <= tol for p in P])

    def extreme_points(self, num_directions: int, rng: np.random.Generator) -> np.ndarray:
        """Support points along the axes and ``num_directions`` random directions."""
        n = self.dim
        dirs = np.vstack([np.eye(n), -np.eye(n), rng.normal(size=(num_directions, n))])
        return np.array([self.support(d)[1] for d in dirs])

    def sample(self, num: int, rng: np.random.Generator, num_directions: int = 12) -> np.ndarray:
        """Random points: LP support points and random convex combinations of them."""
        ext = self.extreme_points(num_directions, rng)
        k = ext.shape[0]
        if num <= k:
            return ext[:num]
        weights = rng.dirichlet(np.full(k, 0.5), size=num - k)
        return np.vstack([ext, weights @ ext])

    def __repr__(self):
        return f"ConstrainedZonotope(dim={self.dim}, generators={self.num_generators}, constraints={self.num_constraints})"


@dataclass(frozen=True, eq=False)
class Polytope:
    """Polytope in halfspace form ``{x : C x <= d}`` and/or vertex form."""

    C: Optional[np.ndarray] = None
    d: Optional[np.ndarray] = None
    V: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.C is None and self.V is None:
            raise ValueError("polytope needs a halfspace or a vertex representation")
        if self.C is not None:
            C = _frozen(np.atleast_2d(self.C), 2, "C")
            d = _frozen(self.d, 1, "d")
            if C.shape[0] != d.size:
                raise ValueError("C and d differ in number of rows")
            if np.any(np.linalg.norm(C, axis=1) == 0.0):
                raise ValueError("halfspace with zero normal vector")
            object.__setattr__(self, "C", C)
            object.__setattr__(self, "d", d)
        if self.V is not None:
            V = _frozen(np.atleast_2d(self.V), 2, "V")
            if self.C is not None and V.shape[1] != self.C.shape[1]:
                raise ValueError("vertex and halfspace dimensions differ")
            object.__setattr__(self, "V", V)

    @classmethod
    def from_box(cls, lower, upper) -> "Polytope":
        lo = np.asarray(lower, dtype=float)
        hi = np.asarray(upper, dtype=float)
        n = lo.size
        return cls(np.vstack([np.eye(n), -np.eye(n)]), np.concatenate([hi, -lo]))

    @classmethod
    def from_vertices(cls, V) -> "Polytope":
        return cls(V=V)

    @property
    def dim(self) -> int:
        return self.C.shape[1] if self.C is not None else self.V.shape[1]

    @property
    def has_hrep(self) -> bool:
        return self.C is not None

    def is_normalized(self, tol=1e-12) -> bool:
        return bool(np.all(np.abs(np.linalg.norm(self.C, axis=1) - 1.0) <= tol))

    def normalized(self) -> "Polytope":
        if self.C is None:
            raise ValueError("normalization needs a halfspace representation")
        norms = np.linalg.norm(self.C, axis=1)
        return Polytope(self.C / norms[:, None], self.d / norms, self.V)

    def contains(self, points, tol: float = 1e-9) -> np.ndarray:
        P = np.atleast_2d(np.asarray(points, dtype=float))
        if self.C is None:
            raise ValueError("membership needs a halfspace representation")
        return np.all(P @ self.C.T <= self.d + tol, axis=1)

    def vertices(self) -> np.ndarray:
        if self.V is not None:
            return np.array(self.V)
        return enumerate_vertices(self.C, self.d)

    def with_vertices(self) -> "Polytope":
        if self.V is not None:
            return self
        return Polytope(self.C, self.d, enumerate_vertices(self.C, self.d))

    def __repr__(self):
        parts = []
        if self.C is not None:
            parts.append(f"halfspaces={self.C.shape[0]}")
        if self.V is not None:
            parts.append(f"vertices={self.V.shape[0]}")
        return f"Polytope(dim={self.dim}, {', '.join(parts)})"


ZonoLike = Union[Zonotope, ConstrainedZonotope]


def _check_same_dim(a, b):
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


def _factor_residual(c, G, A, b, x) -> float:
    if x.shape != c.shape:
        raise ValueError("point dimension mismatch")
    g = G.shape[1]
    r = x - c
    if g == 0:
        if A is not None and A.shape[0] and np.any(np.abs(b) > 1e-12):
            return math.inf
        return float(np.max(np.abs(r))) if r.size else 0.0
    n = c.size
    # variables [a (g), s]: min s  s.t.  -s <= G a - r <= s
    obj = np.zeros(g + 1)
    obj[-1] = 1.0
    ones = np.ones((n, 1))
    A_ub = np.block([[G, -ones], [-G, -ones]])
    b_ub = np.concatenate([r, -r])
    A_eq = None
    b_eq = None
    if A is not None and A.shape[0]:
        A_eq = np.hstack([A, np.zeros((A.shape[0], 1))])
        b_eq = b
    lower = np.concatenate([-np.ones(g), [0.0]])
    upper = np.concatenate([np.ones(g), [np.inf]])
    res = solve_lp(LinearProgram(obj, A_eq, b_eq, A_ub, b_ub, lower, upper))
    if res.status == "infeasible":
        return math.inf
    if not res.optimal:
        raise LPError(res.status, "membership")
    return max(res.value, 0.0)


def linear_map(M, Z: Zonotope) -> Zonotope:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[1] != Z.dim:
        raise ValueError(f"matrix with {M.shape[1]} columns cannot map a {Z.dim}-dimensional zonotope")
    return Zonotope(M @ Z.center, M @ Z.generators)


def minkowski_sum(Z1: Zonotope, Z2: Zonotope) -> Zonotope:
    _check_same_dim(Z1, Z2)
    return Zonotope(Z1.center + Z2.center, np.hstack([Z1.generators, Z2.generators]))


def lin_comb_enclosure(Z1: Zonotope, Z2: Zonotope) -> Zonotope:
    """Zonotope enclosing ``{l s1 + (1 - l) s2 : s1 in Z1, s2 in Z2, l in [0, 1]}``.

    The operand with fewer generators is paired column by column with the
    first generators of the other one; the remaining generators are kept.
    """
    _check_same_dim(Z1, Z2)
    if Z1.num_generators > Z2.num_generators:
        Z1, Z2 = Z2, Z1
    g1 = Z1.num_generators
    G1 = Z1.generators
    G2a = Z2.generators[:, :g1]
    G2b = Z2.generators[:, g1:]
    c = 0.5 * (Z1.center + Z2.center)
    G = np.hstack([0.5 * (Z1.center - Z2.center)[:, None], 0.5 * (G1 + G2a), 0.5 * (G1 - G2a), G2b])
    return Zonotope(c, G)


def girard_order(G: np.ndarray) -> np.ndarray:
    """Generator indices sorted ascending by ``||g||_1 - ||g||_inf`` (stable)."""
    A = np.abs(G)
    return np.argsort(A.sum(axis=0) - A.max(axis=0, initial=0.0), kind="stable")


def reduce_girard(Z: Zonotope, target_order: float) -> tuple[Zonotope, np.ndarray]:
    """Girard's order reduction.

    Returns the reduced zonotope and the diagonal matrix of boxed generators
    (``n x 0`` when nothing was reduced).
    """
    if target_order < 1:
        raise ValueError("target order must be >= 1")
    n = Z.dim
    gamma = Z.num_generators
    chi = gamma - int(math.floor((target_order - 1) * n))
    if chi <= 0:
        return Z, np.zeros((n, 0))
    G = Z.generators
    perm = girard_order(G)
    reduced = perm[:chi]
    kept = perm[chi:]
    Gred = np.diag(np.abs(G[:, reduced]).sum(axis=1))
    box_cols = Gred[:, np.any(Gred != 0.0, axis=0)]
    return Zonotope(Z.center, np.hstack([G[:, kept], box_cols])), Gred


def box_enclosure_zono(Z: Zonotope) -> Interval:
    r = np.abs(Z.generators).sum(axis=1)
    return Interval(Z.center - r, Z.center + r)


def box_enclosure_conzono(CZ: ConstrainedZonotope) -> Interval:
    """Tightest box, from ``2n`` LPs over the factor polytope."""
    if CZ.num_constraints == 0:
        return box_enclosure_zono(Zonotope(CZ.center, CZ.generators))
    n = CZ.dim
    lo = np.empty(n)
    hi = np.empty(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        hi[i] = CZ.support(e)[0]
        lo[i] = -CZ.support(-e)[0]
    return Interval(np.minimum(lo, hi), np.maximum(lo, hi))


def err_radius(S: ZonoLike) -> float:
    """Radius of the smallest origin-centred ball enclosing the box enclosure of ``S``."""
    if isinstance(S, Zonotope):
        return float(np.linalg.norm(np.abs(S.center) + np.abs(S.generators).sum(axis=1)))
    box = S.box()
    return float(np.linalg.norm(np.maximum(np.abs(box.lower), np.abs(box.upper))))


def interval_matrix_times_zonotope(M, Z: Zonotope) -> Zonotope:
    """Enclosure of ``{N z : N in M, z in Z}`` for an interval matrix ``M``.

    Midpoint map plus a box covering the radius part:
    ``mid(M) Z + box(rad(M) (|c| + sum |G|))``.
    """
    lo = np.asarray(M.lower, dtype=float)
    hi = np.asarray(M.upper, dtype=float)
    if lo.shape[1] != Z.dim:
        raise ValueError(f"interval matrix with {lo.shape[1]} columns cannot map a {Z.dim}-dimensional zonotope")
    mid = 0.5 * (lo + hi)
    rad = 0.5 * (hi - lo)
    spread = rad @ (np.abs(Z.center) + np.abs(Z.generators).sum(axis=1))
    G = mid @ Z.generators
    box = np.diag(spread)[:, spread > 0.0]
    return Zonotope(mid @ Z.center, np.hstack([G, box]))


def minkowski_diff_zono_poly(Z: Zonotope, P: Polytope) -> ConstrainedZonotope:
    """``Z - P`` (Minkowski/Pontryagin difference) as a constrained zonotope.

    Intersects the translates ``Z - v_i`` over the vertices of ``P``: one
    copy of the factors per vertex, tied together by equality constraints.
    """
    V = P.vertices()
    if V.shape[1] != Z.dim:
        raise ValueError("dimension mismatch")
    s = V.shape[0]
    n, g = Z.generators.shape
    G = Z.generators
    Gfull = np.hstack([G, np.zeros((n, g * (s - 1)))])
    if s == 1 or g == 0:
        if g == 0 and s > 1 and np.any(np.abs(V - V[0]) > 0):
            # a point minus a non-degenerate polytope is empty: encode 0 = 1
            return ConstrainedZonotope(Z.center - V[0], np.zeros((n, 1)), np.zeros((1, 1)), np.ones(1))
        return ConstrainedZonotope(Z.center - V[0], G)
    A = np.zeros((n * (s - 1), g * s))
    b = np.empty(n * (s - 1))
    for i in range(1, s):
        rows = slice(n * (i - 1), n * i)
        A[rows, :g] = G
        A[rows, g * i : g * (i + 1)] = -G
        b[rows] = V[0] - V[i]
    return ConstrainedZonotope(Z.center - V[0], Gfull, A, b)


def cartesian_product(Z1: Zonotope, Z2: Zonotope) -> Zonotope:
    G = np.zeros((Z1.dim + Z2.dim, Z1.num_generators + Z2.num_generators))
    G[: Z1.dim, : Z1.num_generators] = Z1.generators
    G[Z1.dim :, Z1.num_generators :] = Z2.generators
    return Zonotope(np.concatenate([Z1.center, Z2.center]), G)


def project_polygon(Z: Zonotope, dims: Sequence[int] = (0, 1)) -> np.ndarray:
    """Vertices (counter-clockwise) of the projection of ``Z`` onto two coordinates."""
    i, j = (int(d) for d in dims)
    if i == j or not (0 <= i < Z.dim and 0 <= j < Z.dim):
        raise ValueError(f"invalid projection dimensions {dims!r} for a {Z.dim}-dimensional zonotope")
    c = Z.center[[i, j]]
    G = Z.generators[[i, j], :]
    scale = max(1.0, float(np.abs(G).max(initial=0.0)))
    G = G[:, np.linalg.norm(G, axis=0) > 1e-14 * scale]
    if G.shape[1] == 0:
        return c[None, :].copy()
    flip = (G[1] < 0) | ((G[1] == 0) & (G[0] < 0))
    G = np.where(flip, -G, G)
    ang = np.arctan2(G[1], G[0])
    order = np.argsort(ang, kind="stable")
    G = G[:, order]
    ang = ang[order]
    merged = [G[:, 0].copy()]
    last = ang[0]
    for k in range(1, G.shape[1]):
        if abs(ang[k] - last) <= 1e-12:
            merged[-1] += G[:, k]
        else:
            merged.append(G[:, k].copy())
            last = ang[k]
    M = np.array(merged).T
    start = c - M.sum(axis=1)
    steps = np.hstack([2 * M, -2 * M])
    pts = start + np.cumsum(steps, axis=1).T
    verts = np.vstack([start, pts[:-1]])
    return verts


def polygon_area(V: np.ndarray) -> float:
    if V.shape[0] < 3:
        return 0.0
    x, y = V[:, 0], V[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def zonotope_halfspaces(Z: Zonotope) -> Polytope:
    """Facets of a full-dimensional zonotope from ``(n-1)``-subsets of generators."""
    n = Z.dim
    G = Z.generators
    if n == 1:
        r = float(np.abs(G).sum())
        return Polytope(np.array([[1.0], [-1.0]]), np.array([Z.center[0] + r, -Z.center[0] + r]))
    if G.shape[1] < n or np.linalg.matrix_rank(G) < n:
        raise ValueError("halfspace representation needs a full-dimensional zonotope")
    normals = []
    for idx in itertools.combinations(range(G.shape[1]), n - 1):
        M = G[:, idx]
        nv = np.array([(-1) ** k * np.linalg.det(np.delete(M, k, axis=0)) for k in range(n)])
        norm = np.linalg.norm(nv)
        if norm <= 1e-12 * max(1.0, np.abs(M).max()):
            continue
        normals.append(nv / norm)
    N = np.array(normals)
    N = np.vstack([N, -N])
    # deduplicate parallel facets
    N = np.unique(np.round(N, 12), axis=0)
    N = N / np.linalg.norm(N, axis=1)[:, None]
    d = N @ Z.center + np.abs(N @ G).sum(axis=1)
    return Polytope(N, d)


def enumerate_vertices(C, d, tol: float = 1e-9) -> np.ndarray:
    """Brute-force vertex enumeration of a bounded ``{x : C x <= d}`` (small ``n``)."""
    C = np.asarray(C, dtype=float)
    d = np.asarray(d, dtype=float)
    m, n = C.shape
    pts = []
    for idx in itertools.combinations(range(m), n):
        M = C[list(idx)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, d[list(idx)])
        if np.all(C @ x <= d + tol * (1 + np.abs(d))):
            pts.append(x)
    if not pts:
        return np.zeros((0, n))
    P = np.array(pts)
    keep = []
    for p in P:
        if not any(np.linalg.norm(p - q) <= 1e-9 * (1 + np.linalg.norm(q)) for q in keep):
            keep.append(p)
    return np.array(keep)
