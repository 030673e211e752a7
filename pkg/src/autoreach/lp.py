"""Small dense linear programs.

Every LP in the package (emptiness, box enclosures, containment and
intersection checks) goes through :func:`solve_lp`.  The actual solver sits
behind :class:`LPSolver` so a different backend (e.g. exact rational
arithmetic) can be swapped in without touching callers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional, Protocol

import numpy as np
from scipy.optimize import linprog

FEASIBILITY_TOL = 1e-8
GAP_TOL = 1e-9

Status = Literal["optimal", "infeasible", "unbounded", "failure"]


class LPError(RuntimeError):
    """Raised when a caller needs an optimal value and the solver cannot give one."""

    def __init__(self, status: str, message: str = ""):
        super().__init__(f"LP {status}" + (f": {message}" if message else ""))
        self.status = status


@dataclass(frozen=True)
class LinearProgram:
    """``objective @ x`` subject to ``A_eq x = b_eq``, ``A_ub x <= b_ub``, ``lower <= x <= upper``.

    Infinite entries in ``lower``/``upper`` mean the variable is free on that side.
    """

    objective: np.ndarray
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    A_ub: Optional[np.ndarray] = None
    b_ub: Optional[np.ndarray] = None
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None

    def __post_init__(self):
        obj = np.atleast_1d(np.asarray(self.objective, dtype=float))
        if obj.ndim != 1 or obj.size == 0:
            raise ValueError("objective must be a non-empty vector")
        nvar = obj.size
        object.__setattr__(self, "objective", obj)
        for mat, rhs in (("A_eq", "b_eq"), ("A_ub", "b_ub")):
            M = getattr(self, mat)
            r = getattr(self, rhs)
            if M is None or np.size(M) == 0:
                object.__setattr__(self, mat, np.zeros((0, nvar)))
                object.__setattr__(self, rhs, np.zeros(0))
                continue
            M = np.atleast_2d(np.asarray(M, dtype=float))
            r = np.atleast_1d(np.asarray(r, dtype=float))
            if M.shape[1] != nvar or M.shape[0] != r.size:
                raise ValueError(f"{mat}/{rhs} shapes {M.shape}/{r.shape} inconsistent with {nvar} variables")
            object.__setattr__(self, mat, M)
            object.__setattr__(self, rhs, r)
        lo = np.full(nvar, -np.inf) if self.lower is None else np.broadcast_to(np.asarray(self.lower, float), (nvar,))
        hi = np.full(nvar, np.inf) if self.upper is None else np.broadcast_to(np.asarray(self.upper, float), (nvar,))
        object.__setattr__(self, "lower", np.array(lo))
        object.__setattr__(self, "upper", np.array(hi))

    @property
    def num_vars(self) -> int:
        return self.objective.size


@dataclass(frozen=True)
class LPResult:
    status: Status
    value: float = float("nan")
    x: Optional[np.ndarray] = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class LPSolver(Protocol):
    def solve(self, lp: LinearProgram) -> LPResult:
        """Minimize ``lp``."""


class HighsSolver:
    """Dual simplex from HiGHS via :func:`scipy.optimize.linprog`."""

    method = "highs-ds"

    def solve(self, lp: LinearProgram) -> LPResult:
        if np.any(lp.lower > lp.upper):
            return LPResult("infeasible")
        bounds = [(None if np.isneginf(lo) else lo, None if np.isposinf(hi) else hi) for lo, hi in zip(lp.lower, lp.upper)]
        res = linprog(
            lp.objective,
            A_ub=lp.A_ub if lp.A_ub.shape[0] else None,
            b_ub=lp.b_ub if lp.A_ub.shape[0] else None,
            A_eq=lp.A_eq if lp.A_eq.shape[0] else None,
            b_eq=lp.b_eq if lp.A_eq.shape[0] else None,
            bounds=bounds,
            method=self.method,
            options={"primal_feasibility_tolerance": FEASIBILITY_TOL * 1e-1, "dual_feasibility_tolerance": GAP_TOL},
        )
        if res.status == 0:
            return LPResult("optimal", float(res.fun), np.asarray(res.x))
        if res.status == 2:
            return LPResult("infeasible")
        if res.status == 3:
            return LPResult("unbounded")
        return LPResult("failure")


default_solver: LPSolver = HighsSolver()


def solve_lp(lp: LinearProgram, sense: Literal["min", "max"] = "min", solver: Optional[LPSolver] = None) -> LPResult:
    """Solve ``lp`` in the given sense.

    The returned value is always in the caller's sense, i.e. for ``"max"`` it
    is the maximum of ``objective @ x``.
    """
    if sense not in ("min", "max"):
        raise ValueError(f"unknown sense {sense!r}")
    solver = solver or default_solver
    if sense == "max":
        flipped = LinearProgram(-lp.objective, lp.A_eq, lp.b_eq, lp.A_ub, lp.b_ub, lp.lower, lp.upper)
        res = solver.solve(flipped)
        if res.optimal:
            return LPResult("optimal", -res.value, res.x)
        return res
    return solver.solve(lp)


def optimal_value(lp: LinearProgram, sense: Literal["min", "max"] = "min") -> float:
    res = solve_lp(lp, sense)
    if not res.optimal:
        raise LPError(res.status)
    return res.value


def is_feasible(lp: LinearProgram) -> bool:
    """Feasibility of the constraint set of ``lp`` (objective ignored)."""
    probe = LinearProgram(np.zeros(lp.num_vars), lp.A_eq, lp.b_eq, lp.A_ub, lp.b_ub, lp.lower, lp.upper)
    res = solve_lp(probe)
    if res.status == "failure":
        raise LPError("failure", "feasibility probe")
    return res.optimal
