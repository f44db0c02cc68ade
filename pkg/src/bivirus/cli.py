"""Command-line entry point: reproducible runs with CSV outputs.

Subcommands: spectra, check-assumptions, classify, simulate, sweep, bracket.
Outputs are deterministic for a given (config, seed): initial points come
from a PCG64 generator seeded with --seed, workers are index-ordered, and a
single writer emits all files (UTF-8, LF, '.' decimal separator).
"""

from __future__ import annotations

import argparse
import os
import sys as _sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import kernels
from .analysis import (bracket_coexistence, classify, write_bracket_csv,
                       write_verdict_csv)
from .dynamics import (BiVirusSystem, StateD, integrate, summary_row,
                       write_summary_csv, write_trajectory_csv)
from .errors import BivirusError
from .graph import Graph, degrees, load_edge_list, pf_eigen
from .rates import check_assumptions, check_dfr, parse_rate_pair
from .sweep import (default_tau_range, sweep_linear, thread_count,
                    threshold_curves, write_curves_csv, write_region_csv)


def _existing_path(value: str) -> Path:
    path = Path(value)
    if not path.is_file():
        raise argparse.ArgumentTypeError(f"file not found: {value}")
    return path


def _positive(value: str) -> float:
    x = float(value)
    if x <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return x


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bivirus",
        description="Simulate and classify competing SIS epidemics on "
                    "overlaid graphs.")
    parser.add_argument("--out-dir", default=".",
                        help="directory for output CSV files (default: .)")
    sub = parser.add_subparsers(dest="command", required=True)

    spectra = sub.add_parser("spectra", help="spectral radii and degree bounds")
    spectra.add_argument("--graph-a", type=_existing_path, required=True)
    spectra.add_argument("--graph-b", type=_existing_path)

    check = sub.add_parser("check-assumptions",
                           help="sampled rate-model assumption and DFR reports")
    check.add_argument("--graph-a", type=_existing_path, required=True)
    check.add_argument("--rates1", required=True)
    check.add_argument("--graph-b", type=_existing_path)
    check.add_argument("--rates2")
    check.add_argument("--samples", type=int, default=64)
    check.add_argument("--seed", type=int, default=0)

    cls = sub.add_parser("classify", help="trichotomy verdict from thresholds")
    _add_system_args(cls)
    cls.add_argument("--eps", type=_positive, default=1e-8)
    cls.add_argument("--samples", type=int, default=16)
    cls.add_argument("--seed", type=int, default=0)

    sim = sub.add_parser("simulate", help="integrate trajectories to CSV")
    _add_system_args(sim)
    sim.add_argument("--starts", type=int, default=1,
                     help="number of seeded random interior starts")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--x0-const", type=float,
                     help="constant initial x level (overrides random starts)")
    sim.add_argument("--y0-const", type=float,
                     help="constant initial y level (with --x0-const)")
    sim.add_argument("--t-max", type=_positive, default=1e4)
    sim.add_argument("--conv-tol", type=float, default=1e-10)

    swp = sub.add_parser("sweep", help="map the (tau1, tau2) plane to regions")
    swp.add_argument("--graph-a", type=_existing_path, required=True)
    swp.add_argument("--graph-b", type=_existing_path, required=True)
    swp.add_argument("--tau1-min", type=_positive)
    swp.add_argument("--tau1-max", type=_positive)
    swp.add_argument("--tau2-min", type=_positive)
    swp.add_argument("--tau2-max", type=_positive)
    swp.add_argument("--grid1", type=int, default=12)
    swp.add_argument("--grid2", type=int, default=12)
    swp.add_argument("--eps", type=_positive, default=1e-8)

    brk = sub.add_parser("bracket", help="coexistence bracket endpoints")
    _add_system_args(brk)
    brk.add_argument("--r", type=_positive, default=1e-4)
    brk.add_argument("--eps", type=_positive, default=1e-8)
    brk.add_argument("--samples", type=int, default=16)
    brk.add_argument("--seed", type=int, default=0)
    return parser


def _add_system_args(sub) -> None:
    sub.add_argument("--graph-a", type=_existing_path, required=True)
    sub.add_argument("--graph-b", type=_existing_path, required=True)
    sub.add_argument("--rates1", required=True,
                     help="e.g. linear:beta=1,delta=1 / case2:alpha=2,delta=1 "
                          "/ case3:alpha=2,k=2")
    sub.add_argument("--rates2", required=True)


def _load_graph(path: Path) -> Graph:
    with open(path, "r", encoding="utf-8") as fh:
        return load_edge_list(fh)


def _build_system(args) -> BiVirusSystem:
    graph_a = _load_graph(args.graph_a)
    graph_b = _load_graph(args.graph_b)
    inf1, rec1 = parse_rate_pair(args.rates1, graph_a)
    inf2, rec2 = parse_rate_pair(args.rates2, graph_b)
    return BiVirusSystem(graph_a=graph_a, graph_b=graph_b,
                         infection1=inf1, recovery1=rec1,
                         infection2=inf2, recovery2=rec2)


def _open_out(out_dir: Path, name: str):
    return open(out_dir / name, "w", encoding="utf-8", newline="\n")


def _write_run_info(out_dir: Path, args) -> None:
    with _open_out(out_dir, "run_info.txt") as fh:
        fh.write(f"command={args.command}\n")
        fh.write(f"backend={kernels.BACKEND}\n")
        fh.write("prng=PCG64\n")
        if hasattr(args, "seed"):
            fh.write(f"seed={args.seed}\n")
        fh.write(f"threads={os.environ.get('BIVIRUS_THREADS', '')}\n")


def _cmd_spectra(args, out_dir: Path) -> int:
    rows = []
    for tag, path in (("A", args.graph_a), ("B", args.graph_b)):
        if path is None:
            continue
        g = _load_graph(path)
        spec = pf_eigen(g.adjacency)
        d_min, d_max = degrees(g)
        print(f"lambda_{tag}={spec.value!r}")
        print(f"d_min_{tag}={d_min} d_max_{tag}={d_max}")
        rows.append((tag, spec.value, d_min, d_max))
    with _open_out(out_dir, "spectra.csv") as fh:
        fh.write("graph,lambda,d_min,d_max\n")
        for tag, lam, d_min, d_max in rows:
            fh.write(f"{tag},{float(lam)!r},{d_min},{d_max}\n")
    return 0


def _cmd_check_assumptions(args, out_dir: Path) -> int:
    pairs = []
    graph_a = _load_graph(args.graph_a)
    pairs.append(("1", parse_rate_pair(args.rates1, graph_a)))
    if args.rates2 is not None:
        if args.graph_b is None:
            raise BivirusError("--rates2 requires --graph-b")
        graph_b = _load_graph(args.graph_b)
        pairs.append(("2", parse_rate_pair(args.rates2, graph_b)))

    with _open_out(out_dir, "assumptions.csv") as fh_a, \
            _open_out(out_dir, "dfr.csv") as fh_d:
        fh_a.write("virus,check,passed,witnesses\n")
        fh_d.write("virus,satisfied,min_margin,argmin\n")
        for tag, (infection, recovery) in pairs:
            report = check_assumptions(infection, recovery,
                                       samples=args.samples, seed=args.seed)
            count = {}
            for w in report.witnesses:
                count[w.check] = count.get(w.check, 0) + 1
            for check_id in sorted(report.passed):
                fh_a.write(f"{tag},{check_id},{report.passed[check_id]},"
                           f"{count.get(check_id, 0)}\n")
            dfr = check_dfr(recovery)
            fh_d.write(f"{tag},{dfr.satisfied},{dfr.min_margin!r},"
                       f"{dfr.argmin!r}\n")
            print(f"virus {tag}: {report.summary()} | DFR "
                  f"{'satisfied' if dfr.satisfied else 'VIOLATED'} "
                  f"(min margin {dfr.min_margin:.3e})")
            for note in report.notes:
                print(f"note: {note}")
    return 0


def _cmd_classify(args, out_dir: Path) -> int:
    sys_ = _build_system(args)
    verdict = classify(sys_, eps=args.eps, samples=args.samples,
                       seed=args.seed)
    with _open_out(out_dir, "verdict.csv") as fh:
        write_verdict_csv(verdict, fh)
    print(f"outcome={verdict.outcome.label}")
    print(f"lambda_u={verdict.lambda_u!r} lambda_v={verdict.lambda_v!r}")
    return 0


def _random_interior_start(n: int, rng) -> StateD:
    split = rng.uniform(0.1, 0.9, size=n)
    total = rng.uniform(0.1, 0.9, size=n)
    return StateD(split * total, (1.0 - split) * total)


def _cmd_simulate(args, out_dir: Path) -> int:
    sys_ = _build_system(args)
    n = sys_.n
    if args.x0_const is not None or args.y0_const is not None:
        x0 = float(args.x0_const or 0.0)
        y0 = float(args.y0_const or 0.0)
        starts = [StateD(np.full(n, x0), np.full(n, y0))]
    else:
        rng = np.random.default_rng(args.seed)
        starts = [_random_interior_start(n, rng) for _ in range(args.starts)]

    def run(start):
        return integrate(sys_, start, t_max=args.t_max,
                         conv_tol=args.conv_tol)

    with ThreadPoolExecutor(max_workers=thread_count(len(starts))) as pool:
        trajectories = list(pool.map(run, starts))

    rows = []
    for idx, traj in enumerate(trajectories):
        with _open_out(out_dir, f"trajectory_{idx:03d}.csv") as fh:
            write_trajectory_csv(traj, fh)
        rows.append(summary_row(traj))
    with _open_out(out_dir, "summary.csv") as fh:
        write_summary_csv(rows, fh)
    for idx, (t_final, avg_x, avg_y, reason) in enumerate(rows):
        print(f"start {idx}: t_final={t_final:.6g} avgX={avg_x:.6g} "
              f"avgY={avg_y:.6g} reason={reason}")
    return 0


def _cmd_sweep(args, out_dir: Path) -> int:
    graph_a = _load_graph(args.graph_a)
    graph_b = _load_graph(args.graph_b)
    lo1, hi1 = default_tau_range(graph_a)
    lo2, hi2 = default_tau_range(graph_b)
    tau1_range = (args.tau1_min or lo1, args.tau1_max or hi1)
    tau2_range = (args.tau2_min or lo2, args.tau2_max or hi2)
    grid = sweep_linear(graph_a, graph_b, tau1_range, tau2_range,
                        grid=(args.grid1, args.grid2), eps=args.eps)
    with _open_out(out_dir, "regions.csv") as fh:
        write_region_csv(grid, fh)
    curves = threshold_curves(graph_a, graph_b, grid.tau2_axis)
    with _open_out(out_dir, "curves.csv") as fh:
        write_curves_csv(curves, fh)
    counts = {}
    for label in grid.labels.ravel():
        counts[label] = counts.get(label, 0) + 1
    print(" ".join(f"{k}={counts[k]}" for k in sorted(counts)))
    return 0


def _cmd_bracket(args, out_dir: Path) -> int:
    sys_ = _build_system(args)
    verdict = classify(sys_, eps=args.eps, samples=args.samples,
                       seed=args.seed)
    bracket = bracket_coexistence(sys_, verdict, r=args.r)
    with _open_out(out_dir, "bracket.csv") as fh:
        write_bracket_csv(bracket, verdict, fh)
    lo_x, lo_y = bracket.lower.avg()
    hi_x, hi_y = bracket.upper.avg()
    print(f"lower: avgX={lo_x!r} avgY={lo_y!r}")
    print(f"upper: avgX={hi_x!r} avgY={hi_y!r}")
    return 0


_COMMANDS = {
    "spectra": _cmd_spectra,
    "check-assumptions": _cmd_check_assumptions,
    "classify": _cmd_classify,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "bracket": _cmd_bracket,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    out_dir = Path(args.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        status = _COMMANDS[args.command](args, out_dir)
        _write_run_info(out_dir, args)
        return status
    except (BivirusError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
