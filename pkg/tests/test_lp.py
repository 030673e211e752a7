import numpy as np
import pytest

from autoreach.lp import LinearProgram, LPError, is_feasible, optimal_value, solve_lp
from oracles import hrep_vertices


def test_simple_bounds():
    res = solve_lp(LinearProgram([1.0], lower=[-1.0], upper=[1.0]), "max")
    assert res.optimal and res.value == 1.0 and np.allclose(res.x, [1.0])
    res = solve_lp(LinearProgram([1.0], lower=[-1.0], upper=[1.0]), "min")
    assert res.value == -1.0


def test_infeasible_and_unbounded():
    res = solve_lp(LinearProgram([1.0], A_eq=[[1.0]], b_eq=[2.0], lower=[0.0], upper=[1.0]))
    assert res.status == "infeasible"
    assert not is_feasible(LinearProgram([0.0], A_eq=[[1.0]], b_eq=[2.0], lower=[0.0], upper=[1.0]))
    res = solve_lp(LinearProgram([1.0]), "max")
    assert res.status == "unbounded"
    with pytest.raises(LPError):
        optimal_value(LinearProgram([1.0]), "max")


def test_shape_validation():
    with pytest.raises(ValueError):
        LinearProgram([1.0, 2.0], A_ub=[[1.0]], b_ub=[1.0])
    with pytest.raises(ValueError):
        solve_lp(LinearProgram([1.0]), "up")


def test_random_lps_match_vertex_enumeration():
    rng = np.random.default_rng(0)
    checked = 0
    while checked < 40:
        n = int(rng.integers(1, 5))
        m = int(rng.integers(n + 1, 9))
        C = rng.normal(size=(m, n))
        d = rng.uniform(0.5, 2.0, size=m)
        # add a bounding box so the region is a polytope
        C = np.vstack([C, np.eye(n), -np.eye(n)])
        d = np.concatenate([d, np.full(2 * n, 3.0)])
        c = rng.normal(size=n)
        V = hrep_vertices(C, d)
        if V.shape[0] == 0:
            continue
        res = solve_lp(LinearProgram(c, A_ub=C, b_ub=d), "max")
        assert res.optimal
        assert abs(res.value - (V @ c).max()) <= 1e-6 * (1 + abs(res.value))
        assert np.all(C @ res.x <= d + 1e-8)
        checked += 1


def test_deterministic():
    rng = np.random.default_rng(1)
    lp = LinearProgram(rng.normal(size=5), A_ub=rng.normal(size=(6, 5)), b_ub=np.ones(6), lower=-np.ones(5), upper=np.ones(5))
    a, b = solve_lp(lp), solve_lp(lp)
    assert a.value == b.value and np.array_equal(a.x, b.x)
