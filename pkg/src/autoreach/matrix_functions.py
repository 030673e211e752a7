"""Matrix exponential and the interval-matrix quantities of the propagation scheme.

Notation: ``E`` is the remainder interval matrix of the truncated exponential
series, ``Fx`` and ``Fu`` are the curvature interval matrices for the state
and the constant input, and ``eta`` is the truncation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import kernels
from .sets import Zonotope, interval_matrix_times_zonotope

ETA_RTOL = 1e-10
ETA_CAP = 200
COND_LIMIT = 1e12


class TruncationOrderError(RuntimeError):
    """No truncation order up to the cap met the convergence test."""


@dataclass(frozen=True, eq=False)
class IntervalMatrix:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float, ndmin=2)
        hi = np.array(self.upper, dtype=float, ndmin=2)
        if lo.shape != hi.shape:
            raise ValueError("lower and upper differ in shape")
        if np.any(lo > hi):
            raise ValueError("lower > upper")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def point(cls, M) -> "IntervalMatrix":
        return cls(M, M)

    @classmethod
    def symmetric(cls, R) -> "IntervalMatrix":
        R = np.asarray(R, dtype=float)
        return cls(-R, R)

    @classmethod
    def zeros(cls, shape) -> "IntervalMatrix":
        return cls(np.zeros(shape), np.zeros(shape))

    @property
    def shape(self):
        return self.lower.shape

    @property
    def mid(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def rad(self) -> np.ndarray:
        return 0.5 * (self.upper - self.lower)

    def magnitude(self) -> np.ndarray:
        return np.maximum(np.abs(self.lower), np.abs(self.upper))

    def frobenius_norm(self) -> float:
        return interval_frobenius_norm(self)

    def __add__(self, other: "IntervalMatrix") -> "IntervalMatrix":
        return IntervalMatrix(self.lower + other.lower, self.upper + other.upper)

    def scale(self, s: float) -> "IntervalMatrix":
        a, b = s * self.lower, s * self.upper
        return IntervalMatrix(np.minimum(a, b), np.maximum(a, b))

    def contains(self, M, tol: float = 0.0) -> bool:
        M = np.asarray(M, dtype=float)
        return bool(np.all(M >= self.lower - tol) and np.all(M <= self.upper + tol))

    def __matmul__(self, Z: Zonotope) -> Zonotope:
        return interval_matrix_times_zonotope(self, Z)

    def __repr__(self):
        return f"IntervalMatrix(shape={self.shape})"


@dataclass(frozen=True, eq=False)
class ExpmBundle:
    """Everything one candidate step size needs from the matrix functions."""

    dt: float
    expAdt: np.ndarray
    eta: int
    E: IntervalMatrix
    Fx: IntervalMatrix
    Fu: IntervalMatrix


def interval_frobenius_norm(M: IntervalMatrix) -> float:
    """``sqrt(sum max(|lower|, |upper|)^2)``, an upper bound on the norm of every member."""
    return float(np.sqrt(np.sum(M.magnitude() ** 2)))


def _square(A) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    return A


def expm(A, t: float = 1.0) -> np.ndarray:
    """``e^{A t}`` by scaling and squaring with Pade approximation."""
    A = _square(A)
    return scipy.linalg.expm(A * t)


def expm_remainder(A, dt: float, eta: int) -> IntervalMatrix:
    """``[-E, E]`` with ``E = e^{|A| dt} - sum_{i<=eta} (|A| dt)^i / i!``."""
    A = _square(A)
    if dt <= 0 or eta < 0:
        raise ValueError("need dt > 0 and eta >= 0")
    E = kernels.expm_tail(np.abs(A) * dt, int(eta))
    return IntervalMatrix.symmetric(np.asarray(E))


def curvature_interval_matrices(A, dt: float, eta: int, E: IntervalMatrix | None = None):
    """``(Fx, Fu)`` for a fixed truncation order ``eta``."""
    A = _square(A)
    n = A.shape[0]
    if E is None:
        E = expm_remainder(A, dt, eta)
    Adt = A * dt
    fx_lo = np.zeros((n, n))
    fx_hi = np.zeros((n, n))
    fu_lo = np.zeros((n, n))
    fu_hi = np.zeros((n, n))
    P = np.eye(n)  # (A dt)^(i-1) / (i-1)!
    for i in range(1, eta + 2):
        c = kernels.curvature_coefficient(i)
        if i >= 2:
            u = c * dt * P / i
            fu_lo += np.minimum(u, 0.0)
            fu_hi += np.maximum(u, 0.0)
        P = P @ Adt / i
        if 2 <= i <= eta:
            x = c * P
            fx_lo += np.minimum(x, 0.0)
            fx_hi += np.maximum(x, 0.0)
    Fx = IntervalMatrix(fx_lo, fx_hi) + E
    Fu = IntervalMatrix(fu_lo, fu_hi) + E.scale(dt)
    return Fx, Fu


def truncation_order_tuning(A, dt: float):
    """Smallest ``eta`` whose partial curvature sum has converged; returns ``(eta, Fx, Fu, E)``.

    Raises :class:`TruncationOrderError` if no order up to the cap converges
    or the remainder overflows.
    """
    A = _square(A)
    if dt <= 0:
        raise ValueError("dt must be positive")
    eta, fx_lo, fx_hi, fu_lo, fu_hi = kernels.taylor_interval_sums(A, float(dt), ETA_CAP, ETA_RTOL)
    if eta < 0:
        raise TruncationOrderError(f"truncation order did not converge within {ETA_CAP} terms (dt={dt:g})")
    E = expm_remainder(A, dt, eta)
    if not np.all(np.isfinite(E.upper)):
        raise TruncationOrderError(f"exponential remainder overflows (dt={dt:g})")
    Fx = IntervalMatrix(fx_lo, fx_hi) + E
    Fu = IntervalMatrix(fu_lo, fu_hi) + E.scale(dt)
    return eta, Fx, Fu, E


def expm_bundle(A, dt: float) -> ExpmBundle:
    eta, Fx, Fu, E = truncation_order_tuning(A, dt)
    return ExpmBundle(float(dt), expm(A, dt), eta, E, Fx, Fu)


def input_taylor_matrices(A, dt: float, eta: int) -> list[np.ndarray]:
    """``[A^i dt^(i+1) / (i+1)!  for i = 1..eta]``."""
    A = _square(A)
    out = []
    P = dt * np.eye(A.shape[0])  # A^i dt^(i+1) / (i+1)!
    for i in range(1, eta + 1):
        P = P @ (A * dt) / (i + 1)
        out.append(P)
    return out


def particular_solution_const(A, dt: float, u, eta: int | None = None, expAdt=None,
                              invertible: bool | None = None) -> np.ndarray:
    """``int_0^dt e^{A s} ds u``, the response to the constant input ``u`` over one step.

    Uses ``A^{-1}(e^{A dt} - I) u`` for well-conditioned ``A``; otherwise the
    power series is summed through the exponential of the augmented matrix
    ``[[A, u], [0, 0]]``, which evaluates it to machine precision.
    ``expAdt`` and ``invertible`` may be passed when already known.
    """
    A = _square(A)
    u = np.asarray(u, dtype=float).reshape(-1)
    n = A.shape[0]
    if u.size != n:
        raise ValueError("input vector dimension mismatch")
    if not np.any(u):
        return np.zeros(n)
    if invertible is None:
        invertible = is_invertible(A)
    if invertible:
        eAdt = expm(A, dt) if expAdt is None else np.asarray(expAdt)
        return np.linalg.solve(A, eAdt @ u - u)
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = A
    M[:n, n] = u
    return scipy.linalg.expm(M * dt)[:n, n]


def particular_solution_set(A, dt: float, U0: Zonotope, eta: int, E: IntervalMatrix):
    """Split enclosure of the one-step input response: ``(PU0, PUrest)``.

    ``PU0 = dt U0`` and ``PUrest = sum_i A_i U0 + (E dt) U0`` with the
    matrices of :func:`input_taylor_matrices`.
    """
    A = _square(A)
    if np.any(U0.center != 0.0):
        raise ValueError("input set must be centred at the origin")
    n = A.shape[0]
    PU0 = Zonotope(np.zeros(n), dt * U0.generators)
    G = U0.generators
    cols = [Ai @ G for Ai in input_taylor_matrices(A, dt, eta)]
    spread = (E.upper * dt) @ np.abs(G).sum(axis=1)
    cols.append(np.diag(spread)[:, spread > 0])
    rest = Zonotope(np.zeros(n), np.hstack(cols) if cols else None).compact()
    return PU0, rest


def is_invertible(A) -> bool:
    A = _square(A)
    c = np.linalg.cond(A)
    return bool(math.isfinite(c) and c < COND_LIMIT)
