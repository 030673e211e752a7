"""Command-line interface: ``autoreach reach | verify | simulate``.

Exit codes: 0 success (or verified), 1 falsified, 2 invalid input,
3 algorithm failure, 4 inconclusive verification.
"""

from __future__ import annotations

import argparse
import sys as _sys
import time

import numpy as np

from . import kernels
from .io import FormatError, load_spec, load_system, result_document, save_result
from .planar import _upper_half, polygon_from_sorted
from .reach import BudgetInfeasibleError, output_reach, reach_adaptive
from .simulate import simulate_random
from .verify import verify

EXIT_OK = 0
EXIT_FALSIFIED = 1
EXIT_INPUT = 2
EXIT_FAILURE = 3
EXIT_INCONCLUSIVE = 4


def _dims(text: str) -> tuple[int, int]:
    try:
        i, j = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected two 1-based indices such as 1,2") from None
    if i < 1 or j < 1 or i == j:
        raise argparse.ArgumentTypeError("indices must be distinct and >= 1")
    return i - 1, j - 1


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def plot_polygon(seq, i: int, dims: tuple[int, int], angle_tol: float) -> np.ndarray:
    """Counter-clockwise vertices of set ``i`` projected onto ``dims``.

    Generators whose directions differ by at most ``angle_tol`` radians are
    replaced by their sum ``s`` plus one generator orthogonal to ``s`` of
    length ``sum |g x s| / |s|``.  The result encloses the exact projection,
    is larger by at most ``sin(angle_tol)`` times the total generator length,
    and has at most about ``4 pi / angle_tol`` vertices.
    """
    if seq.dim == 2 and tuple(dims) == (0, 1):
        c, G = seq.sorted_generators(i)
    else:
        Z = seq.set_at(i)
        if max(dims) >= Z.dim:
            raise ValueError(f"plot dimensions {dims} exceed the set dimension {Z.dim}")
        c = Z.center[list(dims)]
        G = _upper_half(Z.generators[list(dims)])
        G = G[:, np.argsort(np.arctan2(G[1], G[0]), kind="stable")]
    G = G[:, np.any(G != 0.0, axis=0)]
    if angle_tol > 0 and G.shape[1] > 1:
        ang = np.arctan2(G[1], G[0])
        starts = [0]
        for k in range(1, ang.size):
            if ang[k] - ang[starts[-1]] > angle_tol:
                starts.append(k)
        S = np.add.reduceat(G, starts, axis=1)
        L = np.hypot(S[0], S[1])
        cluster = np.repeat(np.arange(len(starts)), np.diff(np.append(starts, ang.size)))
        cross = np.abs(G[0] * S[1, cluster] - G[1] * S[0, cluster]) / L[cluster]
        perp = np.add.reduceat(cross, starts) / L
        G = np.hstack([S, np.vstack([-S[1], S[0]])[:, perp > 0] * perp[perp > 0]])
        G = _upper_half(G)
        G = G[:, np.argsort(np.arctan2(G[1], G[0]), kind="stable")]
    return polygon_from_sorted(c, G)


def _polygons(seq, dims, max_polygons: int, angle_tol: float) -> list:
    K = len(seq)
    idx = np.unique(np.linspace(0, K - 1, min(K, max_polygons)).round().astype(int))
    out = []
    for i in idx:
        t0, t1 = seq.times[i]
        out.append({"step": int(i), "interval": [t0, t1], "vertices": plot_polygon(seq, int(i), dims, angle_tol)})
    return out


def cmd_reach(args) -> int:
    system = load_system(args.system)
    t0 = time.perf_counter()
    R = reach_adaptive(system, args.error, zeta=None if args.auto_zeta else args.zeta)
    seconds = time.perf_counter() - t0
    if args.output_space:
        R = output_reach(R, system)
    fields = {
        "space": R.space,
        "eps_max": R.eps_max,
        "zeta": R.zeta,
        "num_steps": len(R),
        "max_error": float(R.errors.max()) if len(R) else 0.0,
        "seconds": seconds,
        "backend": kernels.BACKEND,
        "seed": None,
        "steps": R.steps,
    }
    seq = R.time_intervals
    if args.save_sets:
        lo, hi = seq.box_bounds()
        fields["boxes"] = [{"interval": list(seq.times[i]), "lower": lo[i], "upper": hi[i]} for i in range(len(seq))]
        Z = seq.set_at(len(seq) - 1)
        fields["final_set"] = {"center": Z.center, "generators": {"columns": Z.generators.T}}
    if args.plot_dims is not None:
        if max(args.plot_dims) >= seq.dim:
            raise FormatError(f"--plot-dims: index exceeds dimension {seq.dim}")
        fields["plot_dims"] = [d + 1 for d in args.plot_dims]
        fields["polygons"] = _polygons(seq, args.plot_dims, args.plot_max, args.plot_angle_tol)
    doc = result_document("reach", **fields)
    if args.out:
        save_result(args.out, doc)
    print(f"reach: {len(R)} steps, max error {fields['max_error']:.6g} <= {R.eps_max:.6g}, zeta {R.zeta:g}, "
          f"{seconds:.2f} s")
    return EXIT_OK


def cmd_verify(args) -> int:
    system = load_system(args.system)
    spec = load_spec(args.spec, system.tFinal)
    verdict = verify(system, spec, max_iters=args.max_iters, eps0=args.eps0, seed=args.seed)
    doc = result_document(
        "verify",
        verdict=verdict.outcome,
        iterations=verdict.iterations,
        eps=verdict.eps,
        delta_hat_G=verdict.delta_hat_G,
        delta_check_G=verdict.delta_check_G,
        delta_hat_F=verdict.delta_hat_F,
        delta_check_F=verdict.delta_check_F,
        witness=verdict.witness,
        history=verdict.history,
        message=verdict.message,
        seed=args.seed,
        backend=kernels.BACKEND,
    )
    if args.out:
        save_result(args.out, doc)
    print(f"verify: {verdict.outcome} after {verdict.iterations} iteration(s), eps {verdict.eps:.6g}")
    if verdict.witness is not None:
        w = verdict.witness
        print(f"witness: {w['kind']} set {w['index']} on [{w['interval'][0]:.6g}, {w['interval'][1]:.6g}]")
    return {"verified": EXIT_OK, "falsified": EXIT_FALSIFIED}.get(verdict.outcome, EXIT_INCONCLUSIVE)


def cmd_simulate(args) -> int:
    system = load_system(args.system)
    t_eval = np.linspace(0.0, system.tFinal, args.points)
    trajs = simulate_random(system, args.n, args.seed, t_eval=t_eval, segments=args.segments, method=args.method)
    doc = result_document(
        "simulate",
        seed=args.seed,
        method=args.method,
        segments=args.segments,
        trajectories=[{"x0": tr.x0, "switch_times": tr.switch_times, "inputs": {"rows": tr.inputs},
                       "t": tr.t, "x": {"rows": tr.x}} for tr in trajs],
    )
    if args.out:
        save_result(args.out, doc)
    print(f"simulate: {len(trajs)} trajectories, {args.points} time points each")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="autoreach", description="Reachability analysis and verification of linear systems")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reach", help="compute an outer approximation with a guaranteed error bound")
    p.add_argument("--system", required=True, help="system file (JSON)")
    p.add_argument("--error", required=True, type=_positive, help="Hausdorff error bound")
    p.add_argument("--out", help="result file")
    p.add_argument("--plot-dims", type=_dims, help="emit polygons projected on these 1-based dimensions, e.g. 1,2")
    p.add_argument("--plot-max", type=int, default=100, help="maximum number of polygons (default 100)")
    p.add_argument("--plot-angle-tol", type=float, default=1e-3,
                   help="merge generators within this angle for plotting (radians, 0 = exact)")
    z = p.add_mutually_exclusive_group()
    z.add_argument("--zeta", type=float, help="share of the bound reserved for order reduction")
    z.add_argument("--auto-zeta", action="store_true", help="choose the share heuristically (default)")
    p.add_argument("--output-space", action="store_true", help="map sets and errors to the output y = Cx + Wv + q")
    p.add_argument("--save-sets", action="store_true", help="store box enclosures of all sets and the final set")
    p.set_defaults(func=cmd_reach)

    p = sub.add_parser("verify", help="prove or disprove a reach-avoid specification")
    p.add_argument("--system", required=True)
    p.add_argument("--spec", required=True, help="specification file (JSON)")
    p.add_argument("--max-iters", type=int, default=10, help="refinement budget (default 10)")
    p.add_argument("--eps0", type=_positive, help="initial error bound (default: estimated from simulations)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="simulate random trajectories")
    p.add_argument("--system", required=True)
    p.add_argument("--n", type=int, required=True, help="number of trajectories")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--segments", type=int, default=20, help="piecewise-constant input segments")
    p.add_argument("--points", type=int, default=101, help="time points per trajectory")
    p.add_argument("--method", choices=["RK45", "exact"], default="RK45")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if getattr(args, "zeta", None) is not None and not 0 <= args.zeta < 1:
        print("error: --zeta must be in [0, 1)", file=_sys.stderr)
        return EXIT_INPUT
    if not 0 <= getattr(args, "plot_angle_tol", 0.0) < 1.0:
        print("error: --plot-angle-tol must be in [0, 1) radians", file=_sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except (FormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_INPUT
    except (BudgetInfeasibleError, RuntimeError, ValueError) as exc:
        print(f"failure: {exc}", file=_sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    _sys.exit(main())
