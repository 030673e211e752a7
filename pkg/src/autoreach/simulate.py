"""Trajectory simulation with piecewise-constant inputs.

Two integrators are available: ``"RK45"`` (adaptive Runge-Kutta from scipy
at tight tolerances) and ``"exact"``, which uses the closed-form solution
of a linear system under a constant input on each segment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

from .reach import LinearSystem
from .sets import Zonotope

RTOL = 1e-10
ATOL = 1e-12


@dataclass(frozen=True, eq=False)
class Trajectory:
    t: np.ndarray  # (K,)
    x: np.ndarray  # (K, n)
    switch_times: np.ndarray  # (S + 1,) segment boundaries
    inputs: np.ndarray  # (S, m) input value on each segment

    @property
    def x0(self) -> np.ndarray:
        return self.x[0]

    def state_at(self, k: int) -> np.ndarray:
        return self.x[k]


def sample_zonotope(Z: Zonotope, num: int, rng: np.random.Generator, extreme_fraction: float = 0.0) -> np.ndarray:
    """Points ``c + G a`` with uniform factors; a fraction uses factors in ``{-1, 1}`` (vertices)."""
    g = Z.num_generators
    a = rng.uniform(-1.0, 1.0, size=(num, g))
    k = int(round(extreme_fraction * num))
    if k and g:
        a[:k] = rng.choice([-1.0, 1.0], size=(k, g))
    return Z.center + a @ Z.generators.T


def random_input_signal(sys: LinearSystem, segments: int, rng: np.random.Generator,
                        extreme_fraction: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Equally spaced switch times over the horizon and one input from ``U`` per segment."""
    if segments < 1:
        raise ValueError("need at least one segment")
    times = np.linspace(0.0, sys.tFinal, segments + 1)
    return times, sample_zonotope(sys.U, segments, rng, extreme_fraction)


def _segment_exact(sys: LinearSystem, x: np.ndarray, u: np.ndarray, taus: np.ndarray) -> np.ndarray:
    n = sys.dim
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = sys.A
    M[:n, n] = sys.B @ u + sys.p
    z = np.append(x, 1.0)
    return np.array([(scipy.linalg.expm(M * tau) @ z)[:n] for tau in taus])


def simulate(sys: LinearSystem, x0, t_eval, switch_times=None, inputs=None, method: str = "RK45",
             rtol: float = RTOL, atol: float = ATOL) -> Trajectory:
    """States at the times ``t_eval`` (sorted, within the horizon) from ``x0``.

    The input is ``inputs[j]`` on ``[switch_times[j], switch_times[j+1])``;
    by default the centre of ``U`` over the whole horizon.
    """
    x = np.array(x0, dtype=float).reshape(-1)
    if x.size != sys.dim:
        raise ValueError("initial state dimension mismatch")
    t_eval = np.asarray(t_eval, dtype=float)
    if np.any(np.diff(t_eval) < 0) or t_eval.size and (t_eval[0] < 0 or t_eval[-1] > sys.tFinal * (1 + 1e-12)):
        raise ValueError("evaluation times must be sorted and inside [0, tFinal]")
    if switch_times is None:
        switch_times = np.array([0.0, sys.tFinal])
        inputs = sys.U.center[None, :]
    switch_times = np.asarray(switch_times, dtype=float)
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    if inputs.shape[0] != switch_times.size - 1:
        raise ValueError("one input value per segment is required")
    if method not in ("RK45", "exact"):
        raise ValueError(f"unknown method {method!r}")
    out = np.empty((t_eval.size, sys.dim))
    A, B, p = sys.A, sys.B, sys.p
    for j in range(inputs.shape[0]):
        s0, s1 = switch_times[j], switch_times[j + 1]
        last = j == inputs.shape[0] - 1
        mask = (t_eval >= s0) & ((t_eval <= s1) if last else (t_eval < s1))
        ts = t_eval[mask]
        u = inputs[j]
        if method == "exact":
            taus = np.append(ts - s0, s1 - s0)
            xs = _segment_exact(sys, x, u, taus)
            out[mask] = xs[:-1]
            x = xs[-1]
            continue
        w = B @ u + p
        tail = ts.size == 0 or ts[-1] < s1
        grid = np.append(ts, s1) if tail else ts
        sol = solve_ivp(lambda _t, y: A @ y + w, (s0, s1), x, method="RK45", t_eval=grid, rtol=rtol, atol=atol)
        if not sol.success:
            raise RuntimeError(f"integration failed: {sol.message}")
        out[mask] = sol.y[:, : ts.size].T
        x = sol.y[:, -1]
    return Trajectory(t_eval, out, switch_times, inputs)


def simulate_random(sys: LinearSystem, num: int, seed: int, t_eval=None, segments: int = 20, method: str = "RK45",
                    extreme_fraction: float = 0.5) -> list[Trajectory]:
    """``num`` trajectories from random initial states and random piecewise-constant inputs.

    A fraction ``extreme_fraction`` of the initial states and input values
    are vertices of ``X0`` and ``U``.  The same seed gives the same samples.
    """
    rng = np.random.default_rng(seed)
    if t_eval is None:
        t_eval = np.linspace(0.0, sys.tFinal, 101)
    X = sample_zonotope(sys.X0, num, rng, extreme_fraction)
    trajs = []
    for x0 in X:
        times, U = random_input_signal(sys, segments, rng, extreme_fraction)
        trajs.append(simulate(sys, x0, t_eval, times, U, method=method))
    return trajs
