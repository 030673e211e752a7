"""Read-only sequences of time-stamped zonotopes.

The adaptive algorithm keeps every generator of the main input solution in
one shared pool, so storing each reachable set separately would cost memory
quadratic in the number of steps.  :class:`PooledSets` stores per set only a
small base zonotope, a box radius and the pool state, and builds the full
zonotope on access.  Support functions over all sets are evaluated without
building any of them.
"""

from __future__ import annotations

import heapq
import math
from collections.abc import Sequence

import numpy as np

from .planar import _upper_half, polygon_from_sorted
from .sets import Zonotope


class SetSequence(Sequence):
    """Sequence of ``(time, Zonotope)``; ``time`` is a float or a ``(t0, t1)`` pair."""

    times: list

    def __len__(self):
        return len(self.times)

    def set_at(self, i: int) -> Zonotope:
        raise NotImplementedError

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        return self.times[i], self.set_at(i)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def support(self, h) -> np.ndarray:
        """Support function ``max_{x in S_i} h.x`` of every set."""
        h = np.asarray(h, dtype=float)
        out = np.empty(len(self))
        for i in range(len(self)):
            Z = self.set_at(i)
            out[i] = h @ Z.center + np.abs(h @ Z.generators).sum()
        return out

    def box_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Lower and upper corners of the box enclosures, both of shape ``(len, n)``."""
        n = self.dim
        lo = np.empty((len(self), n))
        hi = np.empty((len(self), n))
        for i in range(n):
            e = np.zeros(n)
            e[i] = 1.0
            hi[:, i] = self.support(e)
            lo[:, i] = -self.support(-e)
        return lo, hi

    def num_generators(self, i: int) -> int:
        return self.set_at(i).num_generators

    def center(self, i: int) -> np.ndarray:
        return self.set_at(i).center

    def sorted_generators(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Centre and generators of set ``i`` flipped into the upper half-plane and sorted by angle (2D)."""
        Z = self.set_at(i)
        if Z.dim != 2:
            raise ValueError("polygons need two-dimensional sets")
        G = _upper_half(Z.generators)
        return Z.center, G[:, np.argsort(np.arctan2(G[1], G[0]), kind="stable")]

    def polygon(self, i: int) -> np.ndarray:
        """Counter-clockwise vertices of set ``i`` (two-dimensional sets only)."""
        return polygon_from_sorted(*self.sorted_generators(i))


class ListSets(SetSequence):
    def __init__(self, items):
        items = list(items)
        self.times = [t for t, _ in items]
        self._sets = [Z for _, Z in items]
        self.dim = self._sets[0].dim if self._sets else 0

    def set_at(self, i):
        return self._sets[i]


class MappedSets(SetSequence):
    """Image of another sequence under ``x -> M x + offset`` with a zonotope ``offset``."""

    def __init__(self, base: SetSequence, M, offset: Zonotope):
        self.base = base
        self.M = np.atleast_2d(np.asarray(M, dtype=float))
        self.offset = offset
        self.times = base.times
        self.dim = self.M.shape[0]

    def set_at(self, i):
        Z = self.base.set_at(i)
        return Zonotope(self.M @ Z.center + self.offset.center,
                        np.hstack([self.M @ Z.generators, self.offset.generators]))

    def support(self, h):
        h = np.asarray(h, dtype=float)
        off = h @ self.offset.center + np.abs(h @ self.offset.generators).sum()
        return self.base.support(self.M.T @ h) + off


class GeneratorPool:
    """Generators that are appended once and moved into a box at most once.

    ``removed[j]`` is the step in which generator ``j`` was boxed (a large
    value while it is still kept).  Reduction candidates are kept in a heap
    ordered by the Girard criterion ``||g||_1 - ||g||_inf``, ties by age.
    """

    NEVER = np.iinfo(np.int64).max

    def __init__(self, n: int, capacity: int = 256):
        self.n = n
        self.size = 0
        self._G = np.empty((n, capacity))
        self._removed = np.full(capacity, self.NEVER, dtype=np.int64)
        self._heap: list = []
        self.box = np.zeros(n)

    @property
    def G(self) -> np.ndarray:
        return self._G[:, : self.size]

    @property
    def removed(self) -> np.ndarray:
        return self._removed[: self.size]

    @property
    def num_kept(self) -> int:
        return len(self._heap)

    def add(self, G: np.ndarray) -> None:
        G = np.asarray(G, dtype=float)
        G = G[:, np.any(G != 0.0, axis=0)]
        m = G.shape[1]
        if m == 0:
            return
        need = self.size + m
        if need > self._G.shape[1]:
            cap = max(need, 2 * self._G.shape[1])
            G2 = np.empty((self.n, cap))
            G2[:, : self.size] = self.G
            r2 = np.full(cap, self.NEVER, dtype=np.int64)
            r2[: self.size] = self.removed
            self._G, self._removed = G2, r2
        self._G[:, self.size : need] = G
        A = np.abs(G)
        metric = A.sum(axis=0) - A.max(axis=0)
        for k in range(m):
            heapq.heappush(self._heap, (float(metric[k]), self.size + k))
        self.size = need

    def reduce(self, budget: float, step: int) -> tuple[int, float]:
        """Girard reduction with the smallest integer order whose error fits ``budget``.

        The box built by earlier reductions consists of axis-aligned
        generators, which are boxed again without any change of the set, so
        they are not charged.  Returns ``(order, error)``.
        """
        n = self.n
        nb = int(np.count_nonzero(self.box))
        gamma = len(self._heap) + nb
        if gamma == 0:
            return 1, 0.0
        popped = []
        cum = np.zeros(n)
        while self._heap:
            j = self._heap[0][1]
            trial = cum + np.abs(self._G[:, j])
            if math.sqrt(trial @ trial) > budget:
                break
            popped.append(heapq.heappop(self._heap))
            cum = trial
        chi_max = nb + len(popped)
        rho = 1 + max(0, math.ceil((gamma - chi_max) / n))
        chi = max(0, gamma - (rho - 1) * n)
        m = min(len(popped), max(0, chi - nb))
        for item in popped[m:]:
            heapq.heappush(self._heap, item)
        idx = np.array([j for _, j in popped[:m]], dtype=np.int64)
        if m == 0:
            return rho, 0.0
        red = np.abs(self._G[:, idx]).sum(axis=1)
        self._removed[idx] = step
        self.box = self.box + red
        return rho, float(np.linalg.norm(red))


class PooledSets(SetSequence):
    """Sets ``base_i + <0, kept pool generators> + box(radius_i)``.

    ``counts[i]`` pool generators had been added when set ``i`` was formed
    and those with ``removed <= keys[i]`` had been boxed.
    """

    def __init__(self, n: int):
        self.dim = n
        self.times = []
        self._bases = []
        self._keys = []
        self._counts = []
        self._boxes = []
        self._pool_G = np.zeros((n, 0))
        self._removed = np.zeros(0, dtype=np.int64)
        self._padded = None
        self._sorted = None

    def append(self, time, base: Zonotope, key: int, count: int, box: np.ndarray) -> None:
        self.times.append(time)
        self._bases.append(base)
        self._keys.append(key)
        self._counts.append(count)
        self._boxes.append(np.array(box, dtype=float))

    def attach(self, pool: GeneratorPool) -> None:
        """Take a final snapshot of the pool (call once the run has finished)."""
        self._pool_G = pool.G.copy()
        self._removed = pool.removed.copy()
        self._pool_G.setflags(write=False)
        self._removed.setflags(write=False)
        self._keys_arr = np.array(self._keys, dtype=np.int64)
        self._counts_arr = np.array(self._counts, dtype=np.int64)
        self._boxes_arr = np.array(self._boxes).reshape(len(self.times), self.dim)

    def _kept(self, i: int) -> np.ndarray:
        c = self._counts[i]
        return np.nonzero(self._removed[:c] > self._keys[i])[0]

    def set_at(self, i):
        base = self._bases[i]
        box = self._boxes[i]
        cols = [base.generators, self._pool_G[:, self._kept(i)]]
        if np.any(box):
            cols.append(np.diag(box)[:, box > 0])
        return Zonotope(base.center, np.hstack(cols))

    def center(self, i: int) -> np.ndarray:
        return self._bases[i].center

    def num_generators(self, i: int) -> int:
        return self._bases[i].num_generators + self._kept(i).size + int(np.count_nonzero(self._boxes[i]))

    def sorted_generators(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """As for :class:`SetSequence`, but using one angular sort of the whole pool."""
        if self.dim != 2:
            raise ValueError("polygons need two-dimensional sets")
        if self._sorted is None:
            G = _upper_half(self._pool_G)
            ang = np.arctan2(G[1], G[0])
            order = np.argsort(ang, kind="stable")
            self._sorted = (order, G[:, order], ang[order], self._removed[order])
        order, Gs, angs, rem = self._sorted
        mask = (order < self._counts[i]) & (rem > self._keys[i])
        Gp, ap = Gs[:, mask], angs[mask]
        base = self._bases[i]
        box = self._boxes[i]
        extra = base.generators
        if np.any(box):
            extra = np.hstack([extra, np.diag(box)[:, box > 0]])
        extra = _upper_half(extra)
        ea = np.arctan2(extra[1], extra[0])
        eo = np.argsort(ea, kind="stable")
        extra, ea = extra[:, eo], ea[eo]
        return base.center, np.insert(Gp, np.searchsorted(ap, ea), extra, axis=1)

    def _pad_bases(self):
        if self._padded is None:
            K, n = len(self.times), self.dim
            g = max((b.num_generators for b in self._bases), default=0)
            C = np.empty((K, n))
            G = np.zeros((K, n, g))
            for i, b in enumerate(self._bases):
                C[i] = b.center
                G[i, :, : b.num_generators] = b.generators
            self._padded = (C, G)
        return self._padded

    def support(self, h):
        h = np.asarray(h, dtype=float)
        K = len(self.times)
        C, G = self._pad_bases()
        out = C @ h + np.abs(np.einsum("j,kjg->kg", h, G)).sum(axis=1)
        out += self._boxes_arr @ np.abs(h)
        if self._pool_G.shape[1]:
            s = np.abs(h @ self._pool_G)
            added = np.concatenate([[0.0], np.cumsum(s)])[self._counts_arr]
            rem_mask = self._removed != GeneratorPool.NEVER
            steps = self._removed[rem_mask]
            if steps.size:
                top = int(max(steps.max(), self._keys_arr.max())) + 1
                per_step = np.bincount(steps, weights=s[rem_mask], minlength=top)
                cum = np.cumsum(per_step)
                gone = np.where(self._keys_arr >= 0, cum[np.clip(self._keys_arr, 0, None)], 0.0)
            else:
                gone = 0.0
            out += added - gone
        return out
