"""Compare the compiled kernels against the numpy fallback.

Run with ``python benchmarks/bench_kernels.py``.  Reports the median time
per call of each kernel for both backends and, at the end, the wall time of
a full adaptive reachability run under each backend (separate processes,
since the backend is fixed at import).
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from autoreach import _kernels_py
from autoreach.models import electric_circuit

try:
    from autoreach import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None


def _cases():
    sys_ = electric_circuit()
    A = sys_.A
    dt = 2.0 / 7000
    eAt = _kernels_py.expm(A * 0.3)
    ch = np.array([0.5, 1.0])
    Gh = np.array([[1.0, 0.2], [0.1, 1.0]])
    u = sys_.B @ sys_.U.center
    Gu = sys_.B @ sys_.U.generators
    rng = np.random.default_rng(0)
    G = rng.normal(size=(2, 400))
    G[:, G[1] < 0] *= -1
    G = G[:, np.argsort(np.arctan2(G[1], G[0]))]
    return {
        "expm_tail": (lambda k: k.expm_tail(np.abs(A) * dt, 4)),
        "taylor_interval_sums": (lambda k: k.taylor_interval_sums(A, dt, 40, 1e-12)),
        "candidate_errors": (lambda k: k.candidate_errors(A, dt, eAt, ch, Gh, u, Gu, 40, 1e-12)),
        "shrunk_zonotope_polygon": (lambda k: k.shrunk_zonotope_polygon(G, 0.05)),
    }


def _median_time(fn, repeat):
    times = timeit.repeat(fn, number=1, repeat=repeat)
    return float(np.median(times))


def _reach_seconds(pure: bool, eps: float) -> float:
    env = dict(os.environ)
    if pure:
        env["AUTOREACH_PURE_PYTHON"] = "1"
    code = ("import time; from autoreach import reach_adaptive, electric_circuit; s = electric_circuit(); "
            f"t = time.perf_counter(); reach_adaptive(s, {eps}); print(time.perf_counter() - t)")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=200)
    parser.add_argument("--eps", type=float, default=0.02, help="error bound of the end-to-end run")
    parser.add_argument("--no-reach", action="store_true", help="skip the end-to-end comparison")
    args = parser.parse_args(argv)

    print(f"{'kernel':26s} {'python [us]':>12s} {'cython [us]':>12s} {'speedup':>8s}")
    for name, fn in _cases().items():
        tp = _median_time(lambda: fn(_kernels_py), args.repeat)
        if _compiled is None:
            print(f"{name:26s} {tp * 1e6:12.1f} {'n/a':>12s} {'':>8s}")
            continue
        tc = _median_time(lambda: fn(_compiled), args.repeat)
        print(f"{name:26s} {tp * 1e6:12.1f} {tc * 1e6:12.1f} {tp / tc:8.2f}")

    if not args.no_reach:
        tp = _reach_seconds(True, args.eps)
        line = f"reach_adaptive eps={args.eps:g}: python {tp:.2f} s"
        if _compiled is not None:
            tc = _reach_seconds(False, args.eps)
            line += f", cython {tc:.2f} s, speedup {tp / tc:.2f}"
        print(line)


if __name__ == "__main__":
    main()
