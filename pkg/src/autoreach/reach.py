"""Reachable-set propagation for linear time-invariant systems.

``reach_fixed`` runs the propagation scheme with user-chosen time step,
truncation order and zonotope order.  ``reach_adaptive`` tunes all three per
step so that every time-interval set is within a prescribed Hausdorff
distance of the exact reachable set.

Error symbols used throughout (all Hausdorff-distance bounds):

``eps_hom``       affine (homogeneous) time-interval error of one step
``eps_acc_step``  time-point error of the input solution added in one step
``eps_U_step``    time-interval error from using the end-of-step input set
``eps_red_step``  order-reduction error of one step
``eps_acc``/``eps_red``  the last two summed over all previous steps
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from . import kernels
from .matrix_functions import (
    ETA_CAP,
    ETA_RTOL,
    IntervalMatrix,
    TruncationOrderError,
    curvature_interval_matrices,
    expm,
    expm_remainder,
    input_taylor_matrices,
    particular_solution_const,
    is_invertible,
    particular_solution_set,
)
from .sets import (
    Zonotope,
    err_radius,
    girard_order,
    interval_matrix_times_zonotope,
    lin_comb_enclosure,
    linear_map,
    minkowski_sum,
    reduce_girard,
)
from .setseq import GeneratorPool, ListSets, MappedSets, PooledSets, SetSequence

MAX_STEPS = 10**6
ZETA_GRID = np.round(np.arange(0.0, 0.951, 0.01), 2)
DRY_RUN_STEPS = 64
ESTIMATE_SAMPLES = 200
# budgets are shrunk by this relative amount so that summing the accepted
# error terms in floating point cannot overshoot the bound
BUDGET_SAFETY = 1e-12


class BudgetInfeasibleError(RuntimeError):
    """The adaptive loop could not find an admissible step."""


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """``x' = A x + B u + p``, ``y = C x + W v + q`` with ``x(0) in X0``, ``u in U``, ``v in V``."""

    A: np.ndarray
    X0: Zonotope
    tFinal: float
    B: Optional[np.ndarray] = None
    U: Optional[Zonotope] = None
    p: Optional[np.ndarray] = None
    C: Optional[np.ndarray] = None
    W: Optional[np.ndarray] = None
    q: Optional[np.ndarray] = None
    V: Optional[Zonotope] = None
    u_tilde: np.ndarray = field(init=False, repr=False)
    U0: Zonotope = field(init=False, repr=False)

    def __post_init__(self):
        A = np.array(self.A, dtype=float, ndmin=2)
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError(f"A must be square, got shape {A.shape}")
        if not isinstance(self.X0, Zonotope) or self.X0.dim != n:
            raise ValueError(f"X0 must be a zonotope of dimension {n}")
        if not (self.tFinal > 0 and math.isfinite(self.tFinal)):
            raise ValueError("tFinal must be positive and finite")
        B = np.zeros((n, 1)) if self.B is None else np.array(self.B, dtype=float, ndmin=2)
        if B.shape[0] != n:
            raise ValueError(f"B must have {n} rows, got shape {B.shape}")
        U = Zonotope(np.zeros(B.shape[1])) if self.U is None else self.U
        if U.dim != B.shape[1]:
            raise ValueError(f"U has dimension {U.dim}, B has {B.shape[1]} columns")
        p = np.zeros(n) if self.p is None else np.array(self.p, dtype=float).reshape(-1)
        if p.size != n:
            raise ValueError(f"p must have {n} entries")
        C = np.eye(n) if self.C is None else np.array(self.C, dtype=float, ndmin=2)
        if C.shape[1] != n:
            raise ValueError(f"C must have {n} columns, got shape {C.shape}")
        ell = C.shape[0]
        W = np.zeros((ell, 1)) if self.W is None else np.array(self.W, dtype=float, ndmin=2)
        if W.shape[0] != ell:
            raise ValueError(f"W must have {ell} rows")
        V = Zonotope(np.zeros(W.shape[1])) if self.V is None else self.V
        if V.dim != W.shape[1]:
            raise ValueError(f"V has dimension {V.dim}, W has {W.shape[1]} columns")
        q = np.zeros(ell) if self.q is None else np.array(self.q, dtype=float).reshape(-1)
        if q.size != ell:
            raise ValueError(f"q must have {ell} entries")
        for arr in (A, B, p, C, W, q):
            arr.setflags(write=False)
        for name, val in (("A", A), ("B", B), ("U", U), ("p", p), ("C", C), ("W", W), ("V", V), ("q", q)):
            object.__setattr__(self, name, val)
        object.__setattr__(self, "tFinal", float(self.tFinal))
        u_tilde = B @ U.center + p
        u_tilde.setflags(write=False)
        object.__setattr__(self, "u_tilde", u_tilde)
        object.__setattr__(self, "U0", Zonotope(np.zeros(n), B @ U.generators).compact())

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def with_(self, **changes) -> "LinearSystem":
        kw = {k: getattr(self, k) for k in ("A", "X0", "tFinal", "B", "U", "p", "C", "W", "q", "V")}
        kw.update(changes)
        return LinearSystem(**kw)


@dataclass(frozen=True)
class StepRecord:
    """Parameters and error terms of one step ``[t, t + dt]``.

    ``eps_acc`` and ``eps_red`` are the accumulated values before the step;
    the budget fields are the admissible values the step was checked against.
    """

    k: int
    t: float
    dt: float
    eta: int
    rho: float
    eps_hom: float
    eps_acc_step: float
    eps_U_step: float
    eps_red_step: float
    eps_acc: float
    eps_red: float
    eps_total: float
    eacc_adm_step: float = math.inf
    enonacc_adm: float = math.inf
    ered_adm_step: float = math.inf
    candidates: int = 1

    @property
    def eps_nonacc(self) -> float:
        return self.eps_hom + self.eps_U_step

    @property
    def eps_acc_next(self) -> float:
        return self.eps_acc + self.eps_acc_step

    @property
    def eps_red_next(self) -> float:
        return self.eps_red + self.eps_red_step

    @property
    def t_next(self) -> float:
        return self.t + self.dt


@dataclass(frozen=True, eq=False)
class ReachResult:
    """Time-point sets ``[(t, Zonotope)]`` and time-interval sets ``[((t0, t1), Zonotope)]`` with step records."""

    time_points: SetSequence
    time_intervals: SetSequence
    steps: list  # [StepRecord]
    eps_max: float
    zeta: float
    space: str = "state"

    def __len__(self):
        return len(self.time_intervals)

    @property
    def errors(self) -> np.ndarray:
        return np.array([s.eps_total for s in self.steps])

    @property
    def final_set(self) -> Zonotope:
        return self.time_intervals[-1][1]

    @property
    def interval_times(self) -> np.ndarray:
        return np.array(self.time_intervals.times, dtype=float).reshape(-1, 2)

    def interval_index(self, t: float) -> int:
        """Index of the first step whose time interval contains ``t``."""
        T = self.interval_times
        idx = np.nonzero((T[:, 0] <= t) & (t <= T[:, 1]))[0]
        if not idx.size:
            raise ValueError(f"time {t} outside the analysed horizon")
        return int(idx[0])

    def overlapping(self, a: float, b: float, closed: bool = True) -> list[int]:
        """Indices of time-interval sets overlapping ``[a, b]``.

        With ``closed`` intervals that only touch at an end point count as
        overlapping; otherwise only those with ``[t_k, t_k+1]`` inside ``[a, b]``
        are returned.
        """
        T = self.interval_times
        if closed:
            mask = (T[:, 0] <= b) & (T[:, 1] >= a)
        else:
            mask = (T[:, 0] >= a) & (T[:, 1] <= b)
        return [int(i) for i in np.nonzero(mask)[0]]


# ---------------------------------------------------------------------------
# error terms


def _err_gens(G: np.ndarray) -> float:
    """``err`` of a zonotope centred at the origin."""
    return float(np.linalg.norm(np.abs(G).sum(axis=1)))


def error_affine(Hk: Zonotope, C: Zonotope, expAdt) -> float:
    """Affine-dynamics time-interval error: ``2 err(C) + sqrt(g) ||(e^{A dt} - I) G_h||_2``."""
    G = Hk.generators
    g = G.shape[1]
    term = 0.0
    if g:
        D = (np.asarray(expAdt) - np.eye(Hk.dim)) @ G
        term = math.sqrt(g) * float(np.linalg.norm(D, 2))
    return 2.0 * err_radius(C) + term


def _input_box_spread(E: IntervalMatrix, dt: float, U0: Zonotope) -> np.ndarray:
    return (E.upper * dt) @ np.abs(U0.generators).sum(axis=1)


def error_particular_step(A, t_k: float, dt: float, eta: int, U0: Zonotope, E: IntervalMatrix, expAtk=None) -> float:
    """Time-point error of the one-step input solution (quadratic in ``dt``)."""
    G = U0.generators
    if G.shape[1] == 0:
        return 0.0
    eAt = expm(A, t_k) if expAtk is None else np.asarray(expAtk)
    Ai = input_taylor_matrices(A, dt, eta)
    box = np.diag(_input_box_spread(E, dt, U0))
    S = sum(Ai) if Ai else np.zeros_like(np.asarray(A, dtype=float))
    G1 = eAt @ np.hstack([S @ G, box])
    G2 = eAt @ np.hstack([M @ G for M in Ai] + [box])
    return _err_gens(G1) + _err_gens(G2)


def error_interval_inputs(A, t_k: float, PU_dt_full: Zonotope, expAtk=None) -> float:
    """``err(e^{A t_k} PU(dt))``: the input set is used for the whole step (linear in ``dt``)."""
    eAt = expm(A, t_k) if expAtk is None else np.asarray(expAtk)
    return err_radius(linear_map(eAt, PU_dt_full))


def error_reduction_step(Gred) -> float:
    """``err(<0, Gred>)`` for the boxed generators returned by the reduction."""
    Gred = np.asarray(Gred, dtype=float)
    if Gred.size == 0:
        return 0.0
    return _err_gens(Gred)


def budgets(k, t_k, dt_k, eps_max, zeta, eps_acc_k, eps_red_k, tFinal):
    """Admissible errors of step ``k``: ``(eacc_adm_step, enonacc_adm, ered_adm_step)``.

    The accumulated reduction and accumulating errors may grow linearly in
    time up to ``zeta eps_max`` and ``(1 - zeta) eps_max`` at ``tFinal``.
    """
    if not 0.0 <= zeta < 1.0:
        raise ValueError("zeta must lie in [0, 1)")
    if eps_max <= 0:
        raise ValueError("eps_max must be positive")
    t1 = t_k + dt_k
    ered_adm = t1 / tFinal * zeta * eps_max
    eacc_adm = t1 / tFinal * (1.0 - zeta) * eps_max
    return eacc_adm - eps_acc_k, eps_max - ered_adm - eps_acc_k, ered_adm - eps_red_k


def tune_dt_regression(history: Sequence[tuple], targets, dt_current: Optional[float] = None) -> Optional[float]:
    """Propose the next candidate step size from the errors seen so far in this step.

    ``history`` holds ``(dt, eps_acc_step, eps_nonacc)`` triples; only the
    last five are used.  The accumulating error is modelled as ``a dt^2``, the
    non-accumulating one as ``b dt`` (least squares through the origin).
    ``targets`` is ``(bound_acc, bound_nonacc)``; each bound is a number or an
    affine pair ``(alpha, beta)`` standing for ``alpha + beta dt``.  Returns
    ``0.9 * min(dt_acc, dt_nonacc)`` clamped to ``[dt_current / 10,
    dt_current]``, or ``None`` when the data do not support a proposal (the
    caller then halves).
    """
    pts = list(history)[-5:]
    if not pts:
        return None
    if dt_current is None:
        dt_current = float(pts[-1][0])
    for d, ea, en in pts:
        if not (d > 0 and math.isfinite(d) and math.isfinite(ea) and math.isfinite(en)):
            return None
    proposals = []
    for col, power, bound in ((1, 2, targets[0]), (2, 1, targets[1])):
        denom = sum(p[0] ** (2 * power) for p in pts)
        coef = sum(p[col] * p[0] ** power for p in pts) / denom
        if coef <= 0:
            continue  # this error vanishes: no constraint
        proposals.append(_solve_power_model(coef, power, bound, dt_current))
    if not proposals:
        return None
    d = min(proposals)
    if not math.isfinite(d):
        return None
    return float(min(max(0.9 * d, dt_current / 10.0), dt_current))


def _solve_power_model(coef: float, power: int, bound, dt_hi: float) -> float:
    """Largest ``d`` with ``coef d^power <= bound(d)``.

    ``bound`` is a number or an affine pair ``(alpha, beta)`` meaning
    ``alpha + beta d``.
    """
    alpha, beta = (bound, 0.0) if np.isscalar(bound) else (float(bound[0]), float(bound[1]))
    if power == 1:
        if coef <= beta:
            return math.inf if alpha >= 0 else 0.0
        return max(alpha / (coef - beta), 0.0)
    disc = beta * beta + 4.0 * coef * alpha
    if disc < 0:
        return 0.0
    return max((beta + math.sqrt(disc)) / (2.0 * coef), 0.0)


# ---------------------------------------------------------------------------
# fixed-parameter propagation


def _time_interval_homogeneous(H: Zonotope, H_next: Zonotope, fx_lo, fx_hi, fu_lo, fu_hi, u) -> Zonotope:
    """Linear combination of ``H`` and ``H_next`` plus the curvature set, assembled in one pass.

    Same set as ``lin_comb_enclosure(H, H_next) + _curvature_set(...)`` for
    time-point sets with equal generator counts; the two boxes of the
    curvature set are merged into one.
    """
    c1, G1 = H.center, H.generators
    c2, G2 = H_next.center, H_next.generators
    mx, rx = 0.5 * (fx_lo + fx_hi), 0.5 * (fx_hi - fx_lo)
    mu, ru = 0.5 * (fu_lo + fu_hi), 0.5 * (fu_hi - fu_lo)
    spread = rx @ (np.abs(c1) + np.abs(G1).sum(axis=1)) + ru @ np.abs(u)
    c = 0.5 * (c1 + c2) + mx @ c1 + mu @ u
    cols = [0.5 * (c1 - c2)[:, None], 0.5 * (G1 + G2), 0.5 * (G1 - G2), mx @ G1]
    if np.any(spread > 0):
        cols.append(np.diag(spread)[:, spread > 0])
    return Zonotope._trusted(c, np.hstack(cols))


def _curvature_set(Fx: IntervalMatrix, Fu: IntervalMatrix, Hk: Zonotope, u_tilde) -> Zonotope:
    Cx = interval_matrix_times_zonotope(Fx, Hk)
    Cu = interval_matrix_times_zonotope(Fu, Zonotope(u_tilde))
    return minkowski_sum(Cx, Cu).compact()


def reach_fixed(sys: LinearSystem, dt: float, eta: int, order: float) -> ReachResult:
    """Propagation with constant step ``dt``, truncation order ``eta`` and zonotope order ``order``.

    The step records carry the same error terms as the adaptive algorithm
    (reduction error measured on the full input solution).
    """
    if eta < 2:
        raise ValueError("eta must be at least 2")
    if order < 1:
        raise ValueError("order must be at least 1")
    ratio = sys.tFinal / dt
    nsteps = int(round(ratio))
    if nsteps < 1 or abs(ratio - nsteps) > 1e-9 * max(1.0, ratio):
        raise ValueError(f"tFinal / dt = {ratio} is not an integer number of steps")
    A = sys.A
    n = sys.dim
    E = expm_remainder(A, dt, eta)
    if not np.all(np.isfinite(E.upper)):
        raise TruncationOrderError("exponential remainder overflows")
    Fx, Fu = curvature_interval_matrices(A, dt, eta, E)
    eAdt = expm(A, dt)
    Pu_dt = particular_solution_const(A, dt, sys.u_tilde, eta)
    PU0_dt, PUrest_dt = particular_solution_set(A, dt, sys.U0, eta, E)
    PU_dt = minkowski_sum(PU0_dt, PUrest_dt)

    Pu = np.zeros(n)
    PU = Zonotope(np.zeros(n))
    H = sys.X0
    eps_acc = eps_red = 0.0
    points = [(0.0, sys.X0)]
    intervals = []
    records = []
    for k in range(nsteps):
        t_k = k * dt
        t_next = (k + 1) * dt if k + 1 < nsteps else sys.tFinal
        eAt = expm(A, t_k)
        Pu = Pu + eAt @ Pu_dt
        H_next = Zonotope(expm(A, t_next) @ sys.X0.center + Pu, expm(A, t_next) @ sys.X0.generators)
        Cset = _curvature_set(Fx, Fu, H, sys.u_tilde)
        Hti = minkowski_sum(lin_comb_enclosure(H, H_next), Cset)
        PU, Gred = reduce_girard(minkowski_sum(PU, linear_map(eAt, PU_dt)).compact(), order)
        R = minkowski_sum(Hti, PU)

        e_hom = error_affine(H, Cset, eAdt)
        e_acc = error_particular_step(A, t_k, dt, eta, sys.U0, E, eAt)
        e_U = error_interval_inputs(A, t_k, PU_dt, eAt)
        e_red = error_reduction_step(Gred)
        records.append(
            StepRecord(k, t_k, t_next - t_k, eta, float(order), e_hom, e_acc, e_U, e_red, eps_acc, eps_red,
                       e_hom + eps_acc + e_U + eps_red + e_red)
        )
        eps_acc += e_acc
        eps_red += e_red
        intervals.append(((t_k, t_next), R))
        points.append((t_next, minkowski_sum(H_next, PU)))
        H = H_next
    return ReachResult(ListSets(points), ListSets(intervals), records, eps_max=math.nan, zeta=math.nan)


# ---------------------------------------------------------------------------
# adaptive propagation


@dataclass
class _Candidate:
    dt: float
    eta: int
    expAdt: np.ndarray
    raw: tuple  # fx_lo, fx_hi, fu_lo, fu_hi, E
    rest: np.ndarray  # box radius of the mapped higher-order input terms
    e_hom: float
    e_acc: float
    e_U: float
    b_acc: float
    b_non: float
    b_red: float

    @property
    def e_non(self):
        return self.e_hom + self.e_U

    @property
    def ok(self):
        return self.e_acc <= self.b_acc and self.e_non <= self.b_non

    def interval_matrices(self):
        fx_lo, fx_hi, fu_lo, fu_hi, E = self.raw
        return IntervalMatrix(fx_lo, fx_hi), IntervalMatrix(fu_lo, fu_hi), IntervalMatrix.symmetric(E)


class _AdaptiveRun:
    """State of one adaptive propagation; ``dry`` skips everything not needed for the step sizes."""

    def __init__(self, sys: LinearSystem, eps_max: float, zeta: float, regression: bool,
                 breakpoints: Iterable[float] = (), dry: bool = False):
        self.sys = sys
        self.eps_max = float(eps_max)
        self.zeta = float(zeta)
        self.regression = regression
        self.dry = dry
        tF = sys.tFinal
        self.breaks = sorted({float(b) for b in breakpoints if 0.0 < b < tF}) + [tF]
        n = sys.dim
        self.t = 0.0
        self.k = 0
        self.dt_prev = None
        self.eAt = np.eye(n)
        self.Pu = np.zeros(n)
        self.H = sys.X0
        self.pool = GeneratorPool(n)
        self.rest_rad = np.zeros(n)
        self.eps_acc = 0.0
        self.eps_red = 0.0
        self.points = PooledSets(n)
        self.points.append(0.0, sys.X0, -1, 0, np.zeros(n))
        self.intervals = PooledSets(n)
        self.records = []
        self._Gu = np.ascontiguousarray(sys.U0.generators)
        self._invertible = is_invertible(sys.A)

    def _next_break(self) -> float:
        for b in self.breaks:
            if b > self.t:
                return b
        return self.sys.tFinal

    def _evaluate(self, dt: float) -> Optional[_Candidate]:
        sys = self.sys
        H = self.H
        eta, err_C, e_acc, e_U, hom, rest, expAdt, *raw = kernels.candidate_errors(
            sys.A, dt, self.eAt, H.center, H.generators, sys.u_tilde, self._Gu, ETA_CAP, ETA_RTOL
        )
        if eta < 0:
            return None
        e_hom = 2.0 * err_C + math.sqrt(H.generators.shape[1]) * hom
        if not all(math.isfinite(v) for v in (e_hom, e_acc, e_U)):
            return None
        b_acc, b_non, b_red = budgets(self.k, self.t, dt, self.eps_max, self.zeta, self.eps_acc, self.eps_red,
                                      sys.tFinal)
        s = 1.0 - BUDGET_SAFETY
        return _Candidate(dt, eta, expAdt, tuple(raw), rest, e_hom, e_acc, e_U, b_acc * s, b_non * s, b_red * s)

    def _targets(self):
        tF, z, em = self.sys.tFinal, self.zeta, self.eps_max
        s = 1.0 - BUDGET_SAFETY
        acc = (s * (self.t / tF * (1 - z) * em - self.eps_acc), s * (1 - z) * em / tF)
        non = (s * (em - self.t / tF * z * em - self.eps_acc), -s * z * em / tF)
        return acc, non

    def _find_step(self) -> tuple[_Candidate, int]:
        remaining = self._next_break() - self.t
        dt = self.sys.tFinal if self.dt_prev is None else 2.0 * self.dt_prev
        dt = min(dt, remaining)
        history = []
        tries = 0
        dt_min = 1e-13 * self.sys.tFinal
        while True:
            tries += 1
            cand = self._evaluate(dt)
            if cand is not None and cand.ok:
                return cand, tries
            if cand is not None:
                history.append((dt, cand.e_acc, cand.e_non))
            proposal = None
            if self.regression and cand is not None:
                proposal = tune_dt_regression(history, self._targets(), dt)
                if proposal is not None and proposal >= dt * (1 - 1e-12):
                    proposal = None
            dt = proposal if proposal is not None else 0.5 * dt
            if dt < dt_min:
                raise BudgetInfeasibleError(
                    f"no admissible time step at t={self.t:g} (step {self.k}); errors do not shrink below the budget"
                )

    def _input_step(self, cand: _Candidate) -> tuple[int, float]:
        """Add the input solution of this step: main part to the pool, remainder to the box."""
        if self._Gu.shape[1] == 0:
            return 1, 0.0
        self.rest_rad = self.rest_rad + cand.rest
        self.pool.add(self.eAt @ (cand.dt * self._Gu))
        return self.pool.reduce(cand.b_red, self.k)

    def step(self) -> None:
        sys = self.sys
        A = sys.A
        cand, tries = self._find_step()
        dt = cand.dt
        brk = self._next_break()
        t_next = brk if dt == brk - self.t else self.t + dt
        eAt = self.eAt
        eAt_next = kernels.expm(A * t_next)
        rho, e_red = 1, 0.0
        if not self.dry:
            rho, e_red = self._input_step(cand)
        Pu_dt = particular_solution_const(A, dt, sys.u_tilde, expAdt=cand.expAdt, invertible=self._invertible)
        Pu_next = self.Pu + eAt @ Pu_dt
        H_next = Zonotope._trusted(eAt_next @ sys.X0.center + Pu_next, eAt_next @ sys.X0.generators)

        eps_total = cand.e_hom + self.eps_acc + cand.e_U + self.eps_red + e_red
        self.records.append(
            StepRecord(self.k, self.t, t_next - self.t, cand.eta, float(rho), cand.e_hom, cand.e_acc, cand.e_U,
                       e_red, self.eps_acc, self.eps_red, eps_total, cand.b_acc, cand.b_non, cand.b_red, tries)
        )
        if not self.dry:
            Hti = _time_interval_homogeneous(self.H, H_next, *cand.raw[:4], sys.u_tilde)
            box = self.pool.box + self.rest_rad
            self.intervals.append((self.t, t_next), Hti, self.k, self.pool.size, box)
            self.points.append(t_next, H_next, self.k, self.pool.size, box)
        self.eps_acc += cand.e_acc
        self.eps_red += e_red
        self.Pu = Pu_next
        self.H = H_next
        self.eAt = eAt_next
        self.dt_prev = t_next - self.t
        self.t = t_next
        self.k += 1

    @property
    def done(self) -> bool:
        return self.t >= self.sys.tFinal

    def result(self) -> ReachResult:
        self.points.attach(self.pool)
        self.intervals.attach(self.pool)
        return ReachResult(self.points, self.intervals, self.records, self.eps_max, self.zeta)


def tune_zonotope_order(Z: Zonotope, budget: float) -> tuple[int, float, Zonotope]:
    """Smallest integer order whose Girard reduction error fits ``budget``.

    Equivalent to trying orders 1, 2, ... in turn: the generators are sorted
    once and the cumulative box of the candidates for reduction is scanned.
    Returns ``(order, error, reduced zonotope)``.
    """
    n = Z.dim
    gamma = Z.num_generators
    if gamma == 0:
        return 1, 0.0, Z
    perm = girard_order(Z.generators)
    cum = np.cumsum(np.abs(Z.generators[:, perm]), axis=1)
    errs = np.linalg.norm(cum, axis=0)  # error when the first j+1 are boxed
    ok = np.nonzero(errs <= budget)[0]
    chi_max = int(ok[-1]) + 1 if ok.size else 0
    rho = 1 + max(0, math.ceil((gamma - chi_max) / n))
    reduced, Gred = reduce_girard(Z, rho)
    return rho, error_reduction_step(Gred), reduced


def reach_adaptive(sys: LinearSystem, eps_max: float, zeta: Optional[float] = None, regression: bool = True,
                   breakpoints: Iterable[float] = (), max_steps: int = MAX_STEPS) -> ReachResult:
    """Outer approximation whose time-interval sets are all within ``eps_max`` (Hausdorff) of the exact ones.

    ``zeta`` is the share of the bound reserved for order reduction; by
    default it is chosen by :func:`choose_zeta`.  ``breakpoints`` are times
    that no step may straddle (useful to align steps with specification
    windows).  Without ``regression`` the step size is only halved.
    """
    if not eps_max > 0:
        raise ValueError("eps_max must be positive")
    if zeta is None:
        zeta = choose_zeta(sys, eps_max)
    run = _AdaptiveRun(sys, eps_max, zeta, regression, breakpoints)
    while not run.done:
        if run.k >= max_steps:
            raise BudgetInfeasibleError(f"step limit {max_steps} reached at t={run.t:g}")
        run.step()
    return run.result()


def estimate_step_count(sys: LinearSystem, eps_max: float, max_steps: int = DRY_RUN_STEPS,
                        samples: int = ESTIMATE_SAMPLES) -> float:
    """Number of adaptive steps with ``zeta = 0``.

    Runs at most ``max_steps`` steps of the adaptive loop without building
    sets.  If the horizon is not reached, the rest is extrapolated with the
    per-step error model of the step-size regression: at sample times ``s``
    the errors of a probe step give ``e_acc ~ a(s) dt^2`` and
    ``e_nonacc ~ b(s) dt``, and the largest admissible ``dt(s)`` under the
    budgets (with the accumulated error tracked along the way) sets the local
    step density.
    """
    run = _AdaptiveRun(sys, eps_max, 0.0, True, dry=True)
    while not run.done and run.k < max_steps:
        run.step()
    if run.done:
        return float(run.k)
    A, tF = sys.A, sys.tFinal
    probe = run.dt_prev
    grid = np.geomspace(run.t, tF, samples)
    a_s = np.empty(samples)
    b_s = np.empty(samples)
    Gu = np.ascontiguousarray(sys.U0.generators)
    for i, s in enumerate(grid):
        eAs = kernels.expm(A * s)
        c = eAs @ sys.X0.center + particular_solution_const(A, s, sys.u_tilde)
        G = eAs @ sys.X0.generators
        eta, err_C, e_acc, e_U, hom, *_ = kernels.candidate_errors(A, probe, eAs, c, G, sys.u_tilde, Gu, ETA_CAP,
                                                                    ETA_RTOL)
        if eta < 0:
            a_s[i], b_s[i] = math.inf, math.inf
            continue
        a_s[i] = e_acc / probe**2
        b_s[i] = (2.0 * err_C + math.sqrt(G.shape[1]) * hom + e_U) / probe
    k = float(run.k)
    e_acc = run.eps_acc
    for i in range(samples - 1):
        s, span = grid[i], grid[i + 1] - grid[i]
        e_acc = min(e_acc, s / tF * eps_max)  # the loop keeps it below its budget line
        a = max(a_s[i], a_s[i + 1])
        b = max(b_s[i], b_s[i + 1])
        if not (math.isfinite(a) and math.isfinite(b)):
            return math.inf
        dt = span
        if a > 0:
            dt = min(dt, _solve_power_model(a, 2, (s / tF * eps_max - e_acc, eps_max / tF), span))
        if b > 0:
            dt = min(dt, (eps_max - e_acc) / b)
        if dt <= 0:
            return math.inf
        n_steps = span / dt
        k += n_steps
        e_acc += n_steps * a * dt * dt
    return k


def choose_zeta(sys: LinearSystem, eps_max: float, k0: Optional[float] = None) -> float:
    """Reduction share of the error budget minimising the estimated final zonotope order."""
    U0 = sys.U0
    n = sys.dim
    if U0.num_generators == 0:
        return 0.0
    rho_U = U0.num_generators / n
    if k0 is None:
        k0 = estimate_step_count(sys, eps_max)
    if not math.isfinite(k0):
        return 0.0
    sigma = reduction_error_profile(sys, k0)
    best, best_val = 0.0, math.inf
    for z in ZETA_GRID:
        val = rho_plus(z, k0, rho_U) - rho_minus(z, sigma, eps_max, rho_U)
        if val < best_val - 1e-12:
            best, best_val = float(z), val
    return best


def reduction_error_profile(sys: LinearSystem, k0: float) -> np.ndarray:
    """Sorted cumulative per-step reduction-error estimates for ``ceil(k0)`` equal steps."""
    n = sys.dim
    K = max(1, int(math.ceil(k0)))
    dt = sys.tFinal / K
    eAdt = expm(sys.A, dt)
    M = dt * np.eye(n)
    est = np.empty(K + 1)
    for j in range(K + 1):
        est[j] = _err_gens(M @ sys.U0.generators)
        M = eAdt @ M
    return np.cumsum(np.sort(est))


def rho_plus(zeta: float, k0: float, rho_U: float) -> float:
    """Estimated final order without reduction when ``zeta`` of the budget goes to reduction."""
    return (k0 + 1) * rho_U / (1.0 - zeta)


def rho_minus(zeta: float, sigma: np.ndarray, eps_max: float, rho_U: float) -> float:
    """Estimated order that the reduction budget ``zeta eps_max`` can remove."""
    idx = np.nonzero(sigma <= zeta * eps_max)[0]
    j_star = int(idx[-1]) if idx.size else -1
    return max(0.0, rho_U * (j_star - 1))


def output_reach(R: ReachResult, sys: LinearSystem) -> ReachResult:
    """Map a state-space result to the output ``y = C x + W v + q``; errors scale with ``||C||_2``."""
    C = sys.C
    WV = linear_map(sys.W, sys.V)
    scale = float(np.linalg.norm(C, 2)) if C.size else 0.0

    fields = ("eps_hom", "eps_acc_step", "eps_U_step", "eps_red_step", "eps_acc", "eps_red", "eps_total",
              "eacc_adm_step", "enonacc_adm", "ered_adm_step")
    steps = [replace(s, **{f: getattr(s, f) * scale for f in fields}) for s in R.steps]
    offset = WV + sys.q
    return ReachResult(
        MappedSets(R.time_points, C, offset),
        MappedSets(R.time_intervals, C, offset),
        steps,
        R.eps_max * scale,
        R.zeta,
        space="output",
    )
