"""Command-line entry point.

    oscsync simulate --scenario FILE --out DIR [--dt S] [--tfinal S] [--integrator rk4|zoh-euler]
    oscsync paper-scenario --out DIR [--break-tree]
    oscsync graph-check [--scenario FILE] [--break-tree]
    oscsync verify [--seed N]
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import graph
from .analysis import compute_sync_report
from .io import write_report, write_trajectory_csv
from .scenario_file import ScenarioError, ScenarioFile, dump_scenario, load_scenario, paper_scenario
from .simulator import Scenario, SimulationDiverged, SpanningTreeWarning, run


def _apply_overrides(scenario: Scenario, args) -> Scenario:
    scenario = scenario.with_overrides(dt=args.dt, t_final=args.tfinal, integrator=args.integrator)
    if args.break_tree:
        scenario = scenario.with_overrides(topology=scenario.topology.without_edge(1, 0))
    return scenario


def _simulate(sf: ScenarioFile, out_dir: Path, threshold: float) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SpanningTreeWarning)
        try:
            traj = run(sf.scenario)
        except SimulationDiverged as exc:
            print(f"error: simulation aborted: {exc}", file=sys.stderr)
            return 3
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    report = compute_sync_report(traj, threshold)
    csv_path = write_trajectory_csv(traj, out_dir / "trajectory.csv")
    report_path = write_report(
        report,
        out_dir / "sync_report.txt",
        {"scenario": sf.name, "dt": sf.scenario.dt, "integrator": sf.scenario.integrator},
    )
    (out_dir / "scenario.yaml").write_text(dump_scenario(sf))
    print(report.to_text(), end="")
    print(f"wrote {csv_path} and {report_path}")
    return 0


def cmd_simulate(args) -> int:
    try:
        sf = load_scenario(args.scenario)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ScenarioError as exc:
        print(f"error: {args.scenario}: {exc}", file=sys.stderr)
        return 2
    try:
        scenario = _apply_overrides(sf.scenario, args)
    except ValueError as exc:
        print(f"error: invalid override: {exc}", file=sys.stderr)
        return 2
    out = args.out or sf.output or "results"
    return _simulate(ScenarioFile(scenario, sf.name, sf.output), Path(out), args.threshold)


def cmd_paper_scenario(args) -> int:
    try:
        scenario = _apply_overrides(paper_scenario(), args)
    except ValueError as exc:
        print(f"error: invalid override: {exc}", file=sys.stderr)
        return 2
    name = "paper-broken-tree" if args.break_tree else "paper"
    sf = ScenarioFile(scenario, name)
    if args.dump_scenario:
        Path(args.dump_scenario).write_text(dump_scenario(sf))
        print(f"wrote {args.dump_scenario}")
        return 0
    return _simulate(sf, Path(args.out or "results"), args.threshold)


def _fmt_eigs(eigs) -> str:
    eigs = sorted(eigs, key=lambda z: (round(z.real, 9), round(z.imag, 9)))
    return ", ".join(f"{z.real:.6g}{z.imag:+.6g}j" for z in eigs)


def cmd_graph_check(args) -> int:
    if args.scenario:
        try:
            sf = load_scenario(args.scenario)
        except (FileNotFoundError, ScenarioError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        scenario = sf.scenario
    else:
        scenario = paper_scenario()
    if args.break_tree:
        scenario = scenario.with_overrides(topology=scenario.topology.without_edge(1, 0))
    topo, alpha = scenario.topology, scenario.alpha

    tree = graph.has_spanning_tree_rooted_at_leader(topo)
    lap = graph.build_laplacian(topo)
    lap_eigs = graph.eigenvalues(lap)
    zeros = graph.count_zero_eigenvalues(lap_eigs)
    nonzero = lap_eigs[np.abs(lap_eigs) >= graph.ZERO_EIG_TOL]
    dec = graph.decompose(lap)
    lbar_eigs = graph.eigenvalues(dec.L_bar)
    poles = graph.reduced_system_poles(dec, alpha)
    leader_poles = np.array([1j, -1j]) * math.sqrt(alpha)

    spectrum_ok = zeros == 1 and bool(np.all(nonzero.real > 1e-9))
    poles_ok = bool(poles.real.max() < 0)

    print(f"followers: {topo.n}, edges: {len(topo.edges())}, alpha: {alpha:g}")
    print(f"spanning tree rooted at leader: {'yes' if tree else 'no'}")
    print("Laplacian:")
    print(graph.format_matrix(lap))
    print(f"Laplacian eigenvalues: {_fmt_eigs(lap_eigs)}")
    print(f"zero eigenvalues (|lambda| < {graph.ZERO_EIG_TOL:g}): {zeros}")
    print(f"reduced Laplacian eigenvalues: {_fmt_eigs(lbar_eigs)}")
    print(f"leader poles: {_fmt_eigs(leader_poles)}")
    print(f"reduced-system poles: {_fmt_eigs(poles)}")
    print(f"max Re(reduced-system pole): {poles.real.max():.6g}  <<<")
    print(f"[{'PASS' if spectrum_ok else 'FAIL'}] Laplacian: simple zero eigenvalue, others in open RHP")
    print(f"[{'PASS' if poles_ok else 'FAIL'}] reduced-system poles in open LHP")
    return 0 if (tree and spectrum_ok and poles_ok) else 1


def cmd_verify(args) -> int:
    from .verification import run_all

    results = run_all(seed=args.seed, trials=args.trials, simulate=not args.skip_sim)
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oscsync", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def sim_flags(p):
        p.add_argument("--out", help="output directory (default: results/)")
        p.add_argument("--dt", type=float, help="override integration step [s]")
        p.add_argument("--tfinal", type=float, help="override final time [s]")
        p.add_argument("--integrator", choices=["rk4", "zoh-euler"])
        p.add_argument("--threshold", type=float, default=0.05, help="convergence threshold")
        p.add_argument("--break-tree", action="store_true", help="remove the edge 1->0")

    p = sub.add_parser("simulate", help="run a scenario file")
    p.add_argument("--scenario", required=True)
    sim_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("paper-scenario", help="run the built-in nine-agent scenario")
    sim_flags(p)
    p.add_argument("--dump-scenario", metavar="FILE", help="write the scenario as YAML and exit")
    p.set_defaults(func=cmd_paper_scenario)

    p = sub.add_parser("graph-check", help="spectral checks of the interaction graph")
    p.add_argument("--scenario", help="scenario file (default: built-in scenario)")
    p.add_argument("--break-tree", action="store_true")
    p.set_defaults(func=cmd_graph_check)

    p = sub.add_parser("verify", help="run the randomized property suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--skip-sim", action="store_true", help="skip the simulation-based checks")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
