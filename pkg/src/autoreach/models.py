"""Example systems used by the tests, benchmarks and CLI examples."""

from __future__ import annotations

import numpy as np

from .reach import LinearSystem
from .sets import Zonotope


def electric_circuit(R: float = 2.0, C: float = 1.5e-3, L: float = 2.5e-3, t_final: float = 2.0) -> LinearSystem:
    """Series RLC-type circuit with states (capacitor voltage, inductor current).

    With the default parameters ``A = [[-1000/3, 2000/3], [-400, 0]]`` and
    ``B = [0, 400]^T``; the input voltage varies in ``[-0.1, 0.1]``.
    """
    A = np.array([[-1.0 / (R * C), 1.0 / C], [-1.0 / L, 0.0]])
    B = np.array([[0.0], [1.0 / L]])
    X0 = Zonotope.from_interval([1.0, 3.0], [3.0, 5.0])
    U = Zonotope([0.0], [[0.1]])
    return LinearSystem(A, X0, t_final, B=B, U=U)


def decay_system(x0_low: float = 1.0, x0_high: float = 2.0, t_final: float = 1.0) -> LinearSystem:
    """``x' = -x`` with ``x(0) in [x0_low, x0_high]`` and no input."""
    return LinearSystem(np.array([[-1.0]]), Zonotope.from_interval([x0_low], [x0_high]), t_final)
