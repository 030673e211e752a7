import json
import subprocess
import sys

import numpy as np
import pytest

from autoreach.cli import main
from autoreach.io import save_spec, save_system, system_to_json
from autoreach.models import decay_system, electric_circuit
from autoreach.planar import polygon_contains
from autoreach.reach import LinearSystem
from autoreach.sets import Polytope, Zonotope
from autoreach.verify import SpecSet, Specification


@pytest.fixture
def circuit_file(tmp_path):
    path = tmp_path / "circuit.json"
    save_system(path, electric_circuit())
    return str(path)


@pytest.fixture
def decay_file(tmp_path):
    path = tmp_path / "decay.json"
    save_system(path, decay_system(1.0, 2.0))
    return str(path)


def spec_file(tmp_path, name, **kw):
    path = tmp_path / name
    save_spec(path, Specification(**kw))
    return str(path)


def test_verify_exit_codes(tmp_path, decay_file):
    ok = spec_file(tmp_path, "ok.json", unsafe=[SpecSet(Polytope([[-1.0]], [-3.0]), (0.0, 1.0))])
    bad = spec_file(tmp_path, "bad.json", unsafe=[SpecSet(Polytope([[-1.0]], [-1.5]), (0.0, 0.01))])
    out = tmp_path / "v.json"
    assert main(["verify", "--system", decay_file, "--spec", ok, "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["verdict"] == "verified" and doc["iterations"] == 1
    assert main(["verify", "--system", decay_file, "--spec", bad]) == 1
    assert main(["verify", "--system", decay_file, "--spec", ok, "--max-iters", "0"]) == 4


def test_input_errors_exit_2(tmp_path, decay_file):
    obj = system_to_json(decay_system())
    del obj["tFinal"]
    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps(obj))
    assert main(["reach", "--system", str(broken), "--error", "0.1"]) == 2
    assert main(["reach", "--system", str(tmp_path / "nope.json"), "--error", "0.1"]) == 2
    assert main(["reach", "--system", decay_file, "--error", "-1"]) == 2
    assert main(["reach", "--system", decay_file, "--error", "0.1", "--zeta", "1.5"]) == 2
    assert main(["reach", "--system", decay_file, "--error", "0.1", "--plot-angle-tol", "2"]) == 2
    late = spec_file(tmp_path, "late.json", unsafe=[SpecSet(Polytope([[-1.0]], [-3.0]), (0.0, 5.0))])
    assert main(["verify", "--system", decay_file, "--spec", late]) == 2


def test_algorithm_failure_exit_3(tmp_path):
    path = tmp_path / "stiff.json"
    save_system(path, LinearSystem(np.array([[-1e15]]), Zonotope.from_interval([1.0], [2.0]), 1.0))
    assert main(["reach", "--system", str(path), "--error", "0.1"]) == 3


def test_reach_plot_polygons_convex_ccw(tmp_path, circuit_file):
    out = tmp_path / "r.json"
    assert main(["reach", "--system", circuit_file, "--error", "0.04", "--plot-dims", "1,2", "--save-sets",
                 "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["num_steps"] == len(doc["steps"]) and doc["polygons"]
    assert max(s["eps_total"] for s in doc["steps"]) <= 0.04
    for poly in doc["polygons"]:
        V = np.array(poly["vertices"])
        E = np.roll(V, -1, axis=0) - V
        F = np.roll(E, -1, axis=0)
        cross = E[:, 0] * F[:, 1] - E[:, 1] * F[:, 0]
        assert np.all(cross >= -1e-9 * np.abs(V).max() ** 2)
    assert len(doc["boxes"]) == doc["num_steps"]


def test_simulate_determinism_and_closed_form(tmp_path):
    A = np.diag([-1.0, -2.0])
    path = tmp_path / "diag.json"
    save_system(path, LinearSystem(A, Zonotope.from_interval([1.0, 1.0], [2.0, 2.0]), 1.0))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert main(["simulate", "--system", str(path), "--n", "5", "--seed", "7", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    for tr in json.loads(a.read_text())["trajectories"]:
        t = np.array(tr["t"])
        X = np.array(tr["x"]["rows"])
        ref = np.array(tr["x0"]) * np.exp(np.outer(t, np.diag(A)))
        assert np.allclose(X, ref, rtol=1e-8, atol=1e-8)


def test_simulated_points_inside_reach_output(tmp_path, circuit_file):
    sim, rch = tmp_path / "s.json", tmp_path / "r.json"
    assert main(["simulate", "--system", circuit_file, "--n", "20", "--seed", "1", "--method", "exact",
                 "--points", "41", "--out", str(sim)]) == 0
    assert main(["reach", "--system", circuit_file, "--error", "0.04", "--save-sets", "--plot-dims", "1,2",
                 "--plot-max", "50", "--plot-angle-tol", "0", "--out", str(rch)]) == 0
    doc = json.loads(rch.read_text())
    boxes = doc["boxes"]
    t0 = np.array([b["interval"][0] for b in boxes])
    t1 = np.array([b["interval"][1] for b in boxes])
    lo, hi = np.array([b["lower"] for b in boxes]), np.array([b["upper"] for b in boxes])
    for tr in json.loads(sim.read_text())["trajectories"]:
        for t, x in zip(tr["t"], tr["x"]["rows"]):
            idx = np.flatnonzero((t0 <= t) & (t <= t1))
            assert np.any(np.all((lo[idx] - 1e-9 <= x) & (x <= hi[idx] + 1e-9), axis=1))
    for poly in doc["polygons"]:
        V, i = np.array(poly["vertices"]), poly["step"]
        assert np.all((lo[i] - 1e-9 <= V) & (V <= hi[i] + 1e-9))
        assert np.allclose(V.min(axis=0), lo[i], atol=1e-9) and np.allclose(V.max(axis=0), hi[i], atol=1e-9)


def test_console_entry_point(tmp_path, decay_file):
    r = subprocess.run([sys.executable, "-m", "autoreach.cli", "reach", "--system", decay_file, "--error", "0.1"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "steps" in r.stdout


def test_merged_plot_polygon_encloses_exact_projection():
    from autoreach.cli import plot_polygon
    from autoreach.reach import reach_adaptive
    from oracles import polygon_distance
    R = reach_adaptive(electric_circuit(), 0.04)
    seq = R.time_intervals
    for i in (0, len(seq) // 3, len(seq) - 1):
        exact = plot_polygon(seq, i, (0, 1), 0.0)
        for tol in (1e-3, 1e-2, 0.1):
            merged = plot_polygon(seq, i, (0, 1), tol)
            assert merged.shape[0] <= 4 * np.pi / tol + 4
            assert np.all(polygon_contains(merged, exact, 1e-9))
            total = np.linalg.norm(seq.set_at(i).generators, axis=0).sum()
            d = max(polygon_distance(merged[k : k + 100], exact).max() for k in range(0, len(merged), 100))
            assert d <= np.sin(tol) * total + 1e-9
