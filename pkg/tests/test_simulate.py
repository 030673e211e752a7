import numpy as np
import pytest

from autoreach.models import decay_system, electric_circuit
from autoreach.simulate import sample_zonotope, simulate, simulate_random
from autoreach.sets import Zonotope


def test_decay_closed_form():
    s = decay_system()
    t = np.linspace(0, 1, 11)
    for method in ("RK45", "exact"):
        tr = simulate(s, [1.5], t, method=method)
        assert np.allclose(tr.x[:, 0], 1.5 * np.exp(-t), rtol=1e-8, atol=1e-10)


def test_rk45_matches_exact_with_switching():
    s = electric_circuit()
    rng = np.random.default_rng(0)
    times = np.linspace(0, s.tFinal, 21)
    U = rng.uniform(-0.1, 0.1, size=(20, 1))
    t = np.linspace(0, s.tFinal, 57)
    a = simulate(s, [2.0, 4.0], t, times, U, method="RK45")
    b = simulate(s, [2.0, 4.0], t, times, U, method="exact")
    assert np.allclose(a.x, b.x, atol=1e-7)


def test_eval_times_on_switch_points():
    s = electric_circuit()
    times = np.linspace(0, s.tFinal, 5)
    tr = simulate(s, [1.0, 3.0], times, times, np.array([[0.1], [-0.1], [0.1], [-0.1]]))
    assert tr.x.shape == (5, 2) and np.all(np.isfinite(tr.x))


def test_random_is_deterministic_and_in_sets():
    s = electric_circuit()
    a = simulate_random(s, 5, seed=3, method="exact")
    b = simulate_random(s, 5, seed=3, method="exact")
    for x, y in zip(a, b):
        assert np.array_equal(x.x, y.x)
        assert np.all(np.abs(x.inputs) <= 0.1 + 1e-15)
        assert np.all((x.x0 >= [1, 3]) & (x.x0 <= [3, 5]))


def test_sample_zonotope_extremes():
    Z = Zonotope.from_interval([0, 0], [1, 1])
    P = sample_zonotope(Z, 10, np.random.default_rng(0), extreme_fraction=1.0)
    assert set(map(tuple, P)) <= {(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)}


def test_validation():
    s = decay_system()
    with pytest.raises(ValueError):
        simulate(s, [1.0, 2.0], [0.0])
    with pytest.raises(ValueError):
        simulate(s, [1.0], [0.5, 0.2])
    with pytest.raises(ValueError):
        simulate(s, [1.0], [0.0], method="euler")
