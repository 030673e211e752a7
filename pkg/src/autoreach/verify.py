"""Reach-avoid verification by refinement of the error bound.

A specification lists safe sets (the reachable set must stay inside during
their time windows) and unsafe sets (it must not touch them).  Outer
approximations prove a specification, inner approximations disprove it; when
neither succeeds the error bound is tightened and both are recomputed.
Distances between sets and polytopes with unit normals estimate the accuracy
that is still missing.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .inner import InnerReachResult
from .lp import LinearProgram, LPError, solve_lp
from .planar import clip_polygon, polygon_contains
from .reach import LinearSystem, output_reach, reach_adaptive
from .sets import ConstrainedZonotope, Polytope, Zonotope, box_enclosure_conzono, enumerate_vertices
from .simulate import simulate

INTERSECTION_TOL = 1e-7
VERDICT_MARGIN = 1e-6
WINDOW_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SpecSet:
    """A polytope with an optional time window ``(a, b)`` (``None`` means the whole horizon)."""

    polytope: Polytope
    window: Optional[tuple] = None

    def __post_init__(self):
        if not self.polytope.has_hrep:
            raise ValueError("specification sets need a halfspace representation")
        object.__setattr__(self, "polytope", self.polytope.normalized())
        if self.window is not None:
            a, b = (float(v) for v in self.window)
            if not a <= b:
                raise ValueError(f"invalid time window [{a}, {b}]")
            object.__setattr__(self, "window", (a, b))

    def bounds(self, t_final: float) -> tuple[float, float]:
        return (0.0, t_final) if self.window is None else self.window


@dataclass(frozen=True, eq=False)
class Specification:
    safe: tuple = ()
    unsafe: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "safe", tuple(self.safe))
        object.__setattr__(self, "unsafe", tuple(self.unsafe))
        if not self.safe and not self.unsafe:
            raise ValueError("empty specification")

    @property
    def dim(self) -> int:
        return (self.safe + self.unsafe)[0].polytope.dim

    def check_horizon(self, t_final: float) -> None:
        for kind, items in (("safe", self.safe), ("unsafe", self.unsafe)):
            for j, s in enumerate(items):
                a, b = s.bounds(t_final)
                if a < -WINDOW_TOL or b > t_final * (1 + WINDOW_TOL):
                    raise ValueError(f"{kind} set {j}: window [{a}, {b}] outside [0, {t_final}]")

    def breakpoints(self, t_final: float) -> list[float]:
        pts = set()
        for s in self.safe + self.unsafe:
            for v in s.bounds(t_final):
                if 0.0 < v < t_final:
                    pts.add(v)
        return sorted(pts)


@dataclass
class Verdict:
    outcome: str  # "verified", "falsified" or "inconclusive"
    iterations: int
    eps: float
    delta_hat_G: float = -math.inf
    delta_check_G: float = -math.inf
    delta_hat_F: float = -math.inf
    delta_check_F: float = math.inf
    witness: Optional[dict] = None
    history: list = field(default_factory=list)
    message: str = ""


Region = Union[Zonotope, ConstrainedZonotope, np.ndarray, None]

# ---------------------------------------------------------------------------
# set checks


def containment_distance_zono(Z: Zonotope, P: Polytope) -> float:
    """``max(C c - d + sum_i |C g_i|)``; ``Z`` is inside ``P`` iff the value is ``<= 0``."""
    C, d = P.C, P.d
    return float(np.max(C @ Z.center - d + np.abs(C @ Z.generators).sum(axis=1)))


def containment_distance_conzono(CZ: ConstrainedZonotope, P: Polytope) -> float:
    """Largest halfspace violation over ``CZ`` (one LP per row); ``-inf`` for an empty set."""
    if CZ.num_constraints == 0:
        return containment_distance_zono(Zonotope(CZ.center, CZ.generators), P)
    g = CZ.num_generators
    best = -math.inf
    for row, di in zip(P.C, P.d):
        if g == 0:
            val = float(row @ CZ.center)
        else:
            lp = LinearProgram(CZ.generators.T @ row, CZ.A, CZ.b, lower=-np.ones(g), upper=np.ones(g))
            res = solve_lp(lp, "max")
            if res.status == "infeasible":
                return -math.inf
            if not res.optimal:
                raise LPError(res.status, "containment distance")
            val = float(row @ CZ.center + res.value)
        best = max(best, val - di)
    return best


def containment_distance(S: Region, P: Polytope) -> float:
    """Containment distance of a zonotope, constrained zonotope or polygon (vertex array)."""
    if S is None:
        return -math.inf
    if isinstance(S, Zonotope):
        return containment_distance_zono(S, P)
    if isinstance(S, ConstrainedZonotope):
        return containment_distance_conzono(S, P)
    V = np.asarray(S)
    if V.shape[0] == 0:
        return -math.inf
    return float(np.max(V @ P.C.T - P.d))


def _l1_distance_lp(n: int, P: Polytope, gen_block, center, A_eq_f, b_eq_f, f_lower, f_upper):
    """min ||center + M f - x||_1 s.t. C x <= d and the factor constraints on ``f``."""
    k = gen_block.shape[1]
    # variables [f (k), x (n), s (n)]
    obj = np.concatenate([np.zeros(k + n), np.ones(n)])
    I = np.eye(n)
    A_ub = np.block([
        [gen_block, -I, -I],
        [-gen_block, I, -I],
        [np.zeros((P.C.shape[0], k)), P.C, np.zeros((P.C.shape[0], n))],
    ])
    b_ub = np.concatenate([-center, center, P.d])
    A_eq = b_eq = None
    if A_eq_f is not None and A_eq_f.shape[0]:
        A_eq = np.hstack([A_eq_f, np.zeros((A_eq_f.shape[0], 2 * n))])
        b_eq = b_eq_f
    lower = np.concatenate([f_lower, np.full(n, -np.inf), np.zeros(n)])
    upper = np.concatenate([f_upper, np.full(n, np.inf), np.full(n, np.inf)])
    res = solve_lp(LinearProgram(obj, A_eq, b_eq, A_ub, b_ub, lower, upper))
    if res.status == "infeasible":
        return math.inf, None
    if not res.optimal:
        raise LPError(res.status, "intersection check")
    return max(0.0, float(res.value)), res.x[k : k + n]


def intersection_distance(S: Region, P: Polytope) -> tuple[float, Optional[np.ndarray]]:
    """l1 distance between ``S`` and ``P`` and a closest point of ``P`` (``inf`` if ``S`` is empty)."""
    if S is None:
        return math.inf, None
    n = P.dim
    if isinstance(S, Zonotope):
        S = S.to_conzono()
    if isinstance(S, ConstrainedZonotope):
        g = S.num_generators
        return _l1_distance_lp(n, P, S.generators, S.center, S.A, S.b, -np.ones(g), np.ones(g))
    V = np.asarray(S, dtype=float)
    if V.shape[0] == 0:
        return math.inf, None
    inside = P.contains(V, tol=0.0)
    if np.any(inside):
        return 0.0, V[int(np.argmax(inside))].copy()
    if n == 2:
        W = enumerate_vertices(P.C, P.d)
        if W.shape[0]:
            hit = polygon_contains(V, W, tol=0.0)
            if np.any(hit):
                return 0.0, W[int(np.argmax(hit))].copy()
    m = V.shape[0]
    # convex weights: sum = 1, >= 0
    return _l1_distance_lp(n, P, V.T, np.zeros(n), np.ones((1, m)), np.ones(1), np.zeros(m), np.ones(m))


def intersection_check(S: Region, P: Polytope, tol: float = INTERSECTION_TOL) -> tuple[bool, float]:
    """Whether ``S`` and ``P`` intersect, judged by the l1 distance LP, and that distance."""
    dist, _ = intersection_distance(S, P)
    return dist <= tol, dist


def halfspace_intersection(CZ: ConstrainedZonotope, h, f: float) -> Optional[ConstrainedZonotope]:
    """``CZ`` intersected with ``{x : h x <= f}`` using one extra factor and one constraint.

    ``h x`` ranges over ``[lo, hi]`` on the enclosing zonotope; with
    ``m = f - lo`` the new constraint ``h G a + (m/2) s = f - h c - m/2``
    with ``s in [-1, 1]`` keeps exactly the points with ``h x`` in ``[f - m, f]``.
    Returns ``None`` if the enclosing zonotope misses the halfspace.
    """
    h = np.asarray(h, dtype=float)
    hG = h @ CZ.generators
    spread = float(np.abs(hG).sum())
    hc = float(h @ CZ.center)
    lo, hi = hc - spread, hc + spread
    if f >= hi:
        return CZ
    if f < lo:
        return None
    m = f - lo
    n, g = CZ.generators.shape
    G = np.hstack([CZ.generators, np.zeros((n, 1))])
    A = np.zeros((CZ.num_constraints + 1, g + 1))
    A[:-1, :g] = CZ.A
    A[-1, :g] = hG
    A[-1, g] = 0.5 * m
    b = np.append(CZ.b, f - hc - 0.5 * m)
    return ConstrainedZonotope(CZ.center, G, A, b)


def intersection_diameter(Z: Union[Zonotope, ConstrainedZonotope, np.ndarray], P: Polytope) -> float:
    """Diagonal length of the box enclosure of ``Z`` intersected with ``P``.

    Accepts a polygon vertex array for two-dimensional sets, which is clipped
    exactly.  Raises ``ValueError`` if the intersection is empty.
    """
    if isinstance(Z, np.ndarray):
        W = clip_polygon(Z, P.C, P.d)
        if W.shape[0] == 0:
            raise ValueError("the sets do not intersect")
        return float(np.linalg.norm(np.ptp(W, axis=0)))
    CZ = Z.to_conzono() if isinstance(Z, Zonotope) else Z
    for h, f in zip(P.C, P.d):
        CZ = halfspace_intersection(CZ, h, float(f))
        if CZ is None:
            raise ValueError("the sets do not intersect")
    if CZ.is_empty():
        raise ValueError("the sets do not intersect")
    box = box_enclosure_conzono(CZ)
    w = box.upper - box.lower
    return float(np.sqrt(w @ w))


# ---------------------------------------------------------------------------
# verification loop


def initial_epsilon_guess(sys: LinearSystem, seed: int = 0) -> float:
    """1% of the largest spread of a few simulated trajectories (floored).

    Simulates the centre of ``X0`` and up to nine box corners along the
    axes, each with a random constant input from ``U``, on 100 time points.
    """
    rng = np.random.default_rng(seed)
    c = sys.X0.center
    r = np.abs(sys.X0.generators).sum(axis=1)
    starts = [c]
    for i in range(sys.dim):
        for s in (1.0, -1.0):
            if len(starts) < 10:
                starts.append(c + s * r[i] * np.eye(sys.dim)[i])
    t = np.linspace(0.0, sys.tFinal, 100)
    states = []
    for x0 in starts:
        a = rng.uniform(-1.0, 1.0, size=sys.U.num_generators)
        u = sys.U.center + sys.U.generators @ a
        states.append(simulate(sys, x0, t, [0.0, sys.tFinal], [u], method="exact").x)
    X = np.array(states)  # (trajectories, times, n)
    spread = float(np.max(np.linalg.norm(X.max(axis=0) - X.min(axis=0), axis=1)))
    return max(0.01 * spread, 1e-6 * (1.0 + float(np.linalg.norm(c))))


class _Spans:
    """Union of closed time intervals that are already verified."""

    def __init__(self):
        self.items: list = []

    def add(self, a: float, b: float) -> None:
        self.items.append((a, b))
        self.items.sort()
        merged = []
        for s, e in self.items:
            if merged and s <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], e))
            else:
                merged.append((s, e))
        self.items = merged

    def covers(self, T: np.ndarray) -> np.ndarray:
        if not self.items:
            return np.zeros(T.shape[0], dtype=bool)
        starts = np.array([s for s, _ in self.items])
        ends = np.array([e for _, e in self.items])
        k = np.searchsorted(starts, T[:, 0], side="right") - 1
        ok = k >= 0
        kk = np.clip(k, 0, None)
        return ok & (T[:, 1] <= ends[kk])


def _is_identity_output(sys: LinearSystem) -> bool:
    n = sys.dim
    return (sys.C.shape == (n, n) and np.array_equal(sys.C, np.eye(n)) and not np.any(sys.q)
            and not np.any(sys.W @ sys.V.generators) and not np.any(sys.W @ sys.V.center))


def _row_support(seq, C: np.ndarray, d: np.ndarray, idx: np.ndarray, sign: float) -> np.ndarray:
    """Per set in ``idx``: ``max_r sign * (h_S(sign C_r)) - d_r``-style extremes."""
    out = np.full(idx.size, -np.inf)
    for row, di in zip(C, d):
        if sign > 0:
            val = seq.support(row)[idx] - di
        else:
            val = -seq.support(-row)[idx] - di
        out = np.maximum(out, val)
    return out


def _inner_region(inner: InnerReachResult, i: int):
    if inner.dim == 2:
        return inner.polygon(i)
    return inner.set_at(i)


def _outer_region(seq, i: int):
    if seq.dim == 2:
        return seq.polygon(i)
    return seq.set_at(i)


def _safe_witness(region, P: Polytope) -> Optional[np.ndarray]:
    if isinstance(region, np.ndarray):
        viol = (region @ P.C.T - P.d).max(axis=1)
        return region[int(np.argmax(viol))].copy()
    if isinstance(region, ConstrainedZonotope):
        best, arg = -math.inf, None
        for row, di in zip(P.C, P.d):
            val, x = region.support(row)
            if val - di > best:
                best, arg = val - di, x
        return arg
    return None


def _check_iteration(seq, inner, spec: Specification, t_final: float, spans: dict, skip: bool, stats: dict):
    """One pass over all specification sets; returns the four distances and an optional witness."""
    T = np.array(seq.times, dtype=float).reshape(-1, 2)
    dhG, dcG, dhF, dcF = -math.inf, -math.inf, -math.inf, math.inf
    witness = None
    for j, item in enumerate(spec.safe):
        a, b = item.bounds(t_final)
        P = item.polytope
        key = ("safe", j)
        mask = (T[:, 0] <= b) & (T[:, 1] >= a)
        if skip:
            mask &= ~spans[key].covers(T)
        idx = np.nonzero(mask)[0]
        if not idx.size:
            continue
        dist = _row_support(seq, P.C, P.d, idx, 1.0)
        dhG = max(dhG, float(dist.max()))
        for i in idx[dist <= 0]:
            spans[key].add(T[i, 0], T[i, 1])
        if inner is None:
            continue
        inside = (T[idx, 0] >= a) & (T[idx, 1] <= b) & (dist > 0)
        for i in idx[inside]:
            region = _inner_region(inner, int(i))
            stats["inner"] += 1
            d_in = containment_distance(region, P)
            dcG = max(dcG, d_in)
            if d_in > VERDICT_MARGIN:
                witness = {"kind": "safe", "index": j, "step": int(i), "interval": [float(T[i, 0]), float(T[i, 1])],
                           "point": _safe_witness(region, P), "distance": d_in}
                return dhG, dcG, dhF, dcF, witness
    for j, item in enumerate(spec.unsafe):
        a, b = item.bounds(t_final)
        P = item.polytope
        key = ("unsafe", j)
        mask = (T[:, 0] <= b) & (T[:, 1] >= a)
        if skip:
            mask &= ~spans[key].covers(T)
        idx = np.nonzero(mask)[0]
        if not idx.size:
            continue
        # a set that lies strictly outside one halfspace cannot meet the polytope
        sep = _row_support(seq, P.C, P.d, idx, -1.0)
        for i in idx[sep > 0]:
            spans[key].add(T[i, 0], T[i, 1])
        for i in idx[sep <= 0]:
            region = _outer_region(seq, int(i))
            stats["outer_lp"] += 1
            if isinstance(region, np.ndarray):
                hit = clip_polygon(region, P.C, P.d).shape[0] > 0
            else:
                hit = intersection_check(region, P)[0]
            if not hit:
                spans[key].add(T[i, 0], T[i, 1])
                continue
            try:
                dhF = max(dhF, intersection_diameter(region, P))
            except ValueError:
                dhF = max(dhF, 0.0)
            if inner is None or not (T[i, 0] >= a and T[i, 1] <= b):
                continue
            inner_region = _inner_region(inner, int(i))
            stats["inner"] += 1
            dist, x = intersection_distance(inner_region, P)
            dcF = min(dcF, dist)
            if dist <= INTERSECTION_TOL:
                witness = {"kind": "unsafe", "index": j, "step": int(i), "interval": [float(T[i, 0]), float(T[i, 1])],
                           "point": x, "distance": dist}
                return dhG, dcG, dhF, dcF, witness
    return dhG, dcG, dhF, dcF, witness


def verify(sys: LinearSystem, spec: Specification, max_iters: int = 10, eps0: Optional[float] = None,
           skip_verified: bool = True, zeta: Optional[float] = None, seed: int = 0) -> Verdict:
    """Refine the error bound until the specification is proven or disproven.

    Outer sets prove it (contained in all safe sets, disjoint from all unsafe
    sets); inner sets disprove it.  Inner sets are only used for steps whose
    time interval lies inside the window of the set being checked, and only
    built for steps whose outer set did not pass.  Returns ``inconclusive``
    after ``max_iters`` iterations.
    """
    spec.check_horizon(sys.tFinal)
    identity = _is_identity_output(sys)
    out_dim = sys.dim if identity else sys.C.shape[0]
    if spec.dim != out_dim:
        raise ValueError(f"specification has dimension {spec.dim}, expected {out_dim}")
    eps = float(eps0) if eps0 is not None else initial_epsilon_guess(sys, seed)
    message = "" if identity else "non-trivial output map: falsification disabled"
    breakpoints = spec.breakpoints(sys.tFinal)
    spans = {("safe", j): _Spans() for j in range(len(spec.safe))}
    spans.update({("unsafe", j): _Spans() for j in range(len(spec.unsafe))})
    history = []
    extra_used = False
    last = (-math.inf, -math.inf, -math.inf, math.inf)
    for it in range(1, max_iters + 1):
        t0 = time.perf_counter()
        R = reach_adaptive(sys, eps, zeta=zeta, breakpoints=breakpoints)
        if identity:
            seq = R.time_intervals
            inner = InnerReachResult(seq, R.errors)
        else:
            seq = output_reach(R, sys).time_intervals
            inner = None
        stats = {"inner": 0, "outer_lp": 0}
        dhG, dcG, dhF, dcF, witness = _check_iteration(seq, inner, spec, sys.tFinal, spans, skip_verified, stats)
        last = (dhG, dcG, dhF, dcF)
        history.append({"iteration": it, "eps": eps, "steps": len(R), "delta_hat_G": dhG, "delta_check_G": dcG,
                        "delta_hat_F": dhF, "delta_check_F": dcF, "inner_sets": stats["inner"],
                        "seconds": time.perf_counter() - t0})
        verified = dhG <= 0 and dhF <= 0
        falsified = witness is not None or dcG > 0 or dcF <= INTERSECTION_TOL
        ambiguous = (verified and dhG > -VERDICT_MARGIN and dhG != -math.inf) or \
                    (falsified and witness is None and 0 < dcG <= VERDICT_MARGIN) or (verified and falsified)
        if (verified or falsified) and not (ambiguous and not extra_used):
            outcome = "falsified" if falsified and not verified else "verified"
            if verified and falsified:
                outcome = "inconclusive"
                message = "outer and inner checks disagree within tolerance"
            return Verdict(outcome, it, eps, *last, witness=witness if outcome == "falsified" else None,
                           history=history, message=message)
        if ambiguous:
            extra_used = True
        delta = min(-dcG, dcF)
        if dhG >= 0:
            delta = min(delta, dhG)
        if dhF >= 0:
            delta = min(delta, dhF)
        eps = max(0.1 * eps, min(delta, 0.9 * eps))
    return Verdict("inconclusive", max(0, max_iters), eps, *last, history=history,
                   message=message or "iteration budget exhausted")
