"""Inner approximations obtained by shrinking outer approximations.

If every point of the exact reachable set is within ``eps`` of the outer
approximation ``R`` (in the Hausdorff sense), then ``R - B_eps`` lies inside
the exact set.  The Euclidean ball is replaced by the enclosing
cross-polytope, which has only ``2n`` vertices, so the difference is a
constrained zonotope.  Two-dimensional sets also get an exact polygon path
that avoids linear programs.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from typing import Optional

import numpy as np

from . import kernels
from .planar import polygon_contains, polygon_from_sorted, sample_polygon
from .reach import LinearSystem, ReachResult, reach_adaptive
from .sets import ConstrainedZonotope, Interval, Polytope, Zonotope, minkowski_diff_zono_poly
from .setseq import SetSequence


def cross_polytope(n: int, eps: float) -> Polytope:
    """Vertices ``+-eps sqrt(n) e_i``; the smallest such polytope enclosing the ball of radius ``eps``."""
    if n < 1:
        raise ValueError("dimension must be at least 1")
    if eps < 0:
        raise ValueError("radius must be non-negative")
    r = eps * math.sqrt(n)
    return Polytope(V=np.vstack([-r * np.eye(n), r * np.eye(n)]))


def inner_from_outer(outer: Zonotope, eps: float) -> Optional[ConstrainedZonotope]:
    """``outer - cross_polytope(n, eps)``, or ``None`` when the difference is empty."""
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if eps == 0:
        return outer.to_conzono()
    CZ = minkowski_diff_zono_poly(outer, cross_polytope(outer.dim, eps))
    return None if CZ.is_empty() else CZ


class InnerReachResult:
    """Lazily computed inner approximations of a sequence of outer time-interval sets.

    Set ``i`` is ``outer[i] - cross_polytope(n, radii[i])``.  Nothing is
    computed until a set is requested.  The most recently used ``cache_size``
    results are kept; late sets of long runs can have tens of thousands of
    vertices, so caching all of them does not fit in memory.
    """

    def __init__(self, outer: SetSequence, radii, cache_size: int = 256):
        self.outer = outer
        self.radii = np.asarray(radii, dtype=float)
        if self.radii.shape != (len(outer),):
            raise ValueError("one radius per outer set is required")
        self.dim = outer.dim
        self.times = outer.times
        self._cache_size = cache_size
        self._sets: OrderedDict = OrderedDict()
        self._polys: OrderedDict = OrderedDict()

    def __len__(self):
        return len(self.outer)

    def set_at(self, i: int) -> Optional[ConstrainedZonotope]:
        """Constrained zonotope of set ``i`` (``None`` if empty)."""
        if i in self._sets:
            self._sets.move_to_end(i)
            return self._sets[i]
        if self.dim == 2 and self.polygon(i).shape[0] == 0:
            CZ = None
        else:
            CZ = inner_from_outer(self.outer.set_at(i), float(self.radii[i]))
        return self._remember(self._sets, i, CZ)

    def polygon(self, i: int) -> np.ndarray:
        """Counter-clockwise vertices of set ``i`` (two-dimensional systems); zero rows if empty."""
        if self.dim != 2:
            raise ValueError("polygons need two-dimensional sets")
        if i in self._polys:
            self._polys.move_to_end(i)
            return self._polys[i]
        r = float(self.radii[i])
        c, G = self.outer.sorted_generators(i)
        if r == 0.0:
            V = polygon_from_sorted(c, G)
        else:
            V = kernels.shrunk_zonotope_polygon(G, r * math.sqrt(2.0))
            V = np.zeros((0, 2)) if V is None else (c[None, :] if V.shape[0] == 0 else V + c)
        return self._remember(self._polys, i, V)

    def _remember(self, cache: OrderedDict, i: int, value):
        cache[i] = value
        if len(cache) > self._cache_size:
            cache.popitem(last=False)
        return value

    def is_empty(self, i: int) -> bool:
        if self.dim == 2:
            return self.polygon(i).shape[0] == 0
        return self.set_at(i) is None

    def box(self, i: int) -> Optional[Interval]:
        if self.dim == 2:
            V = self.polygon(i)
            return None if V.shape[0] == 0 else Interval(V.min(axis=0), V.max(axis=0))
        CZ = self.set_at(i)
        return None if CZ is None else CZ.box()

    def sample(self, i: int, num: int, rng: np.random.Generator) -> np.ndarray:
        """Points of set ``i``: uniform for polygons, LP-based otherwise."""
        if self.dim == 2:
            return sample_polygon(self.polygon(i), num, rng)
        CZ = self.set_at(i)
        if CZ is None:
            raise ValueError("cannot sample an empty set")
        return CZ.sample(num, rng)

    def contains(self, i: int, points, tol: float = 1e-9) -> np.ndarray:
        if self.dim == 2:
            return polygon_contains(self.polygon(i), points, tol)
        CZ = self.set_at(i)
        P = np.atleast_2d(points)
        return np.zeros(P.shape[0], dtype=bool) if CZ is None else CZ.contains(P, tol)


def inner_reach(sys: LinearSystem, eps_max: float, **kwargs) -> tuple[ReachResult, InnerReachResult]:
    """Outer and inner approximations with the inner one within ``eps_max`` of the exact set.

    The outer run uses the bound ``eps_max / sqrt(n)``; each inner set
    subtracts the cross-polytope of that step's achieved error.  Extra keyword
    arguments go to :func:`reach_adaptive`.
    """
    if not eps_max > 0:
        raise ValueError("eps_max must be positive")
    R = reach_adaptive(sys, eps_max / math.sqrt(sys.dim), **kwargs)
    return R, InnerReachResult(R.time_intervals, R.errors)
