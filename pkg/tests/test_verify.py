import math

import numpy as np
import pytest

from autoreach.inner import inner_from_outer
from autoreach.models import decay_system, electric_circuit
from autoreach.reach import LinearSystem
from autoreach.sets import ConstrainedZonotope, Polytope, Zonotope
from autoreach.simulate import simulate_random
from autoreach.verify import (
    SpecSet,
    Specification,
    containment_distance,
    containment_distance_conzono,
    containment_distance_zono,
    initial_epsilon_guess,
    intersection_check,
    intersection_diameter,
    intersection_distance,
    verify,
)
from oracles import zono_vertices


def halfspace(h, f, window=None):
    return SpecSet(Polytope(np.atleast_2d(h), np.atleast_1d(f)), window)


def test_containment_distance_zono_cases():
    Z = Zonotope.from_interval([-1, -1], [1, 1])
    assert containment_distance_zono(Z, Polytope.from_box([-1, -1], [1, 1])) == 0.0
    assert containment_distance_zono(Zonotope.point([0.0, 0.0]), Polytope([[1.0, 0.0]], [1.0])) == -1.0


def test_containment_distance_zono_matches_vertices():
    rng = np.random.default_rng(0)
    for _ in range(100):
        Z = Zonotope(rng.normal(size=2), rng.normal(size=(2, 3)) * 0.5)
        P = Polytope(rng.normal(size=(4, 2)), rng.uniform(0.5, 2.0, 4)).normalized()
        V = zono_vertices(Z.center, Z.generators)
        ref = float((V @ P.C.T - P.d).max())
        d = containment_distance_zono(Z, P)
        assert math.isclose(d, ref, abs_tol=1e-9)
        assert (d <= 0) == bool(np.all(V @ P.C.T <= P.d))


def test_containment_distance_conzono():
    rng = np.random.default_rng(1)
    Z = Zonotope(rng.normal(size=2), rng.normal(size=(2, 4)))
    P = Polytope.from_box([-1, -1], [1, 1])
    assert math.isclose(containment_distance_conzono(Z.to_conzono(), P), containment_distance_zono(Z, P), abs_tol=1e-7)
    # a single point through the constraints a = (1, 1)
    CZ = ConstrainedZonotope([0.0, 0.0], np.eye(2), [[1.0, 1.0]], [2.0])
    assert math.isclose(containment_distance_conzono(CZ, P), 0.0, abs_tol=1e-8)
    empty = ConstrainedZonotope([0.0], [[1.0]], [[1.0]], [3.0])
    assert containment_distance_conzono(empty, Polytope([[1.0]], [0.0])) == -math.inf
    assert containment_distance(None, P) == -math.inf


def test_containment_distance_conzono_grid():
    c = np.array([0.2, -0.4])
    G = np.array([[1.0, 0.4, -0.3], [0.1, -0.8, 0.9]])
    CZ = ConstrainedZonotope(c, G, [[0.5, 1.0, 1.0]], [0.2])
    P = Polytope(np.array([[1.0, 1.0], [-1.0, 0.3], [0.2, -1.0]]), np.array([0.5, 0.4, 0.1])).normalized()
    g = np.linspace(-1, 1, 1001)
    a1, a2 = np.meshgrid(g, g)
    a3 = 0.2 - 0.5 * a1 - a2
    ok = np.abs(a3) <= 1
    X = (c[:, None] + G @ np.stack([a1[ok], a2[ok], a3[ok]])).T
    ref = float((X @ P.C.T - P.d).max())
    assert abs(containment_distance_conzono(CZ, P) - ref) <= 1e-4


def test_intersection_check_cases():
    Z = Zonotope.from_interval([-1, -1], [1, 1])
    hit, dist = intersection_check(Z, Polytope([[-1.0, 0.0]], [-3.0]))
    assert not hit and math.isclose(dist, 2.0, abs_tol=1e-8)
    hit, dist = intersection_check(Z, Polytope.from_box([-0.1, -0.1], [0.1, 0.1]))
    assert hit and dist == 0.0
    assert intersection_distance(None, Polytope([[1.0]], [0.0]))[0] == math.inf


def test_intersection_check_polygon_matches_zonotope():
    rng = np.random.default_rng(2)
    for _ in range(30):
        Z = Zonotope(rng.normal(size=2), rng.normal(size=(2, 3)) * 0.5)
        P = Polytope.from_box(rng.normal(size=2) - 0.3, rng.normal(size=2) + 1.0)
        if np.any(P.d[:2] < -P.d[2:]):
            continue
        V = zono_vertices(Z.center, Z.generators)
        d1, _ = intersection_distance(Z, P)
        d2, _ = intersection_distance(V, P)
        assert math.isclose(d1, d2, abs_tol=1e-7)


def test_intersection_diameter():
    Z = Zonotope.from_interval([-1, -1], [1, 1])
    assert math.isclose(intersection_diameter(Z, Polytope.from_box([-5, -5], [5, 5])), 2 * math.sqrt(2), rel_tol=1e-9)
    half = Polytope([[-1.0, 0.0]], [0.0])
    assert math.isclose(intersection_diameter(Z, half), math.sqrt(5), rel_tol=1e-8)
    V = zono_vertices(Z.center, Z.generators)
    assert math.isclose(intersection_diameter(V, half), math.sqrt(5), rel_tol=1e-12)
    rng = np.random.default_rng(3)
    R = Zonotope(rng.normal(size=2), rng.normal(size=(2, 4)))
    prev = math.inf
    for f in (1.0, 0.5, 0.0):
        d = intersection_diameter(R, Polytope([[1.0, 0.0]], [R.center[0] + f]))
        assert d <= prev + 1e-9
        prev = d
    with pytest.raises(ValueError):
        intersection_diameter(Z, Polytope([[1.0, 0.0]], [-2.0]))


def test_specification_validation():
    with pytest.raises(ValueError):
        Specification([], [])
    with pytest.raises(ValueError):
        SpecSet(Polytope(V=[[0.0, 0.0]]))
    with pytest.raises(ValueError):
        halfspace([1.0], 1.0, (0.5, 0.2))
    spec = Specification([halfspace([2.0], 2.0, (0.0, 3.0))])
    assert math.isclose(spec.safe[0].polytope.d[0], 1.0)
    with pytest.raises(ValueError):
        spec.check_horizon(1.0)


def test_decay_scenarios():
    s = decay_system(1.0, 2.0)
    v = verify(s, Specification(unsafe=[halfspace([-1.0], -3.0, (0.0, 1.0))]))
    assert v.outcome == "verified" and v.iterations == 1 and v.witness is None
    v = verify(s, Specification(unsafe=[halfspace([-1.0], -1.5, (0.0, 0.01))]))
    assert v.outcome == "falsified" and v.iterations == 1
    w = v.witness
    assert w["kind"] == "unsafe" and w["interval"][1] <= 0.01 + 1e-12 and w["point"][0] >= 1.5 - 1e-7


def test_budget_zero_is_inconclusive():
    v = verify(decay_system(), Specification(unsafe=[halfspace([-1.0], -3.0)]), max_iters=0)
    assert v.outcome == "inconclusive" and v.iterations == 0


def test_refinement_is_contractive_and_skipping_is_equivalent():
    s = decay_system(1.0, 2.0)
    spec = Specification(unsafe=[halfspace([-1.0], -2.02, (0.0, 1.0))])
    a = verify(s, spec, eps0=0.5)
    b = verify(s, spec, eps0=0.5, skip_verified=False)
    assert a.outcome == b.outcome == "verified"
    assert a.iterations == b.iterations > 1
    eps = [h["eps"] for h in a.history]
    for e0, e1 in zip(eps, eps[1:]):
        assert 0.1 * e0 - 1e-15 <= e1 <= 0.9 * e0 + 1e-15


def test_circuit_scenarios_and_soundness():
    s = electric_circuit()
    ok = verify(s, Specification(safe=[SpecSet(Polytope.from_box([-10, -10], [10, 10]))]))
    assert ok.outcome == "verified"
    trajs = simulate_random(s, 1000, seed=2, method="exact")
    X = np.concatenate([tr.x for tr in trajs])
    assert np.all(np.abs(X) <= 10)
    bad = verify(s, Specification(safe=[SpecSet(Polytope.from_box([-2, -2], [2, 2]))]))
    assert bad.outcome == "falsified"
    w = bad.witness
    assert w["kind"] == "safe" and np.abs(w["point"]).max() > 2


def test_falsification_witness_inner_set_is_nonempty():
    s = decay_system(1.0, 2.0)
    v = verify(s, Specification(unsafe=[halfspace([-1.0], -1.5, (0.0, 0.01))]))
    from autoreach.reach import reach_adaptive
    R = reach_adaptive(s, v.eps, breakpoints=[0.01])
    i = v.witness["step"]
    CZ = inner_from_outer(R.time_intervals.set_at(i), R.errors[i])
    assert CZ is not None
    assert intersection_check(CZ, Polytope([[-1.0]], [-1.5]))[0]


def test_non_identity_output_disables_falsification():
    s = decay_system(1.0, 2.0).with_(C=np.array([[2.0]]))
    v = verify(s, Specification(unsafe=[halfspace([-1.0], -3.0, (0.0, 0.01))]), max_iters=2)
    assert v.outcome != "falsified" and "falsification disabled" in v.message


def test_initial_epsilon_guess():
    s = LinearSystem(np.array([[-1.0]]), Zonotope.point([2.0]), 1.0)
    assert initial_epsilon_guess(s) == 1e-6 * 3.0
    c = electric_circuit()
    assert initial_epsilon_guess(c) == pytest.approx(0.028284271247461905, rel=1e-12)  # regression value
    big = c.with_(X0=Zonotope(10 * c.X0.center, 10 * c.X0.generators), U=Zonotope(10 * c.U.center, 10 * c.U.generators))
    assert initial_epsilon_guess(big) == pytest.approx(10 * initial_epsilon_guess(c), rel=1e-9)
