"""Command-line entry point.

    dualmpc run <scenario> [--mode ...] [--seed N] [--out DIR] [--no-trace]
    dualmpc compare <scenario> [--modes dual baseline] [--seed N] [--out DIR]
    dualmpc bench <scenario> [--reps N]
    dualmpc check

<scenario> is a preset name (stand, flat, asym_friction, wrench, compliant)
or a path to a scenario file.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import runner, scenarios
from .errors import DualMpcError


def _add_scenario_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("scenario", help="preset name or scenario file path")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="out", help="output directory for traces")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="dualmpc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one closed-loop scenario")
    _add_scenario_arg(p_run)
    p_run.add_argument("--mode", choices=("dual", "baseline", "baseline_fast"))
    p_run.add_argument("--no-trace", action="store_true")
    p_run.add_argument("--figures", action="store_true",
                       help="also write gnuplot-style data files per figure class")
    p_run.add_argument("--dump-qp", action="store_true",
                       help="write one tick's QP blocks (P,q,E,c,G,h) as CSV")

    p_cmp = sub.add_parser("compare", help="dual vs baseline on one scenario")
    _add_scenario_arg(p_cmp)
    p_cmp.add_argument("--modes", nargs=2, default=("dual", "baseline"))

    p_bench = sub.add_parser("bench", help="QP timing study")
    _add_scenario_arg(p_bench)
    p_bench.add_argument("--reps", type=int, default=50)

    sub.add_parser("check", help="run the built-in invariant checks")

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except DualMpcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.command == "check":
        return _check()

    sc = scenarios.get_scenario(args.scenario, seed=args.seed)
    if args.command == "run":
        if args.mode:
            sc = replace(sc, mode=args.mode)
        report, trace_path = runner.run(
            sc, out_dir=args.out, trace=not args.no_trace
        )
        print(f"scenario {sc.name} mode {sc.mode} seed {sc.seed}")
        print(report.as_text())
        if trace_path:
            print(f"trace: {trace_path}")
            if args.figures:
                for path in _write_figures(trace_path, args.out):
                    print(f"figure data: {path}")
        if args.dump_qp:
            for tag in _dump_qps(sc, args.out):
                print(f"qp dump: {args.out}/{tag}_*.csv")
        return 0

    if args.command == "compare":
        a = replace(sc, mode=args.modes[0])
        b = replace(sc, mode=args.modes[1])
        rep_a, rep_b, deltas = runner.compare(a, b, out_dir=args.out)
        print(runner.comparison_table(deltas, a.mode, b.mode))
        return 0

    if args.command == "bench":
        stats = runner.bench(sc, repetitions=args.reps)
        print(f"samples: {stats['samples']}")
        for key in ("grf_ms", "footstep_ms", "tick_ms"):
            mean, std, worst = stats[key]
            print(f"{key:<12} mean {mean:.3f}  std {std:.3f}  max {worst:.3f}")
        return 0
    return 2


def _write_figures(trace_path: str, out_dir: str) -> list[str]:
    """Split a trace into gnuplot-friendly data files per figure class."""
    import csv
    import os

    with open(trace_path) as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    groups = {
        "velocity": ["t", "pdot_x", "pdot_y", "pdot_z", "d_pdot_x", "d_pdot_y", "d_pdot_z"],
        "angles": ["t", "theta_x", "theta_y", "theta_z", "d_theta_x", "d_theta_y", "d_theta_z"],
        "rates": ["t", "omega_x", "omega_y", "omega_z", "d_omega_x", "d_omega_y", "d_omega_z"],
        "grf": ["t"] + [f"f_{leg}_{a}" for leg in runner.LEG_KEYS for a in "xyz"],
    }
    stem = os.path.splitext(os.path.basename(trace_path))[0]
    paths = []
    for group, cols in groups.items():
        path = os.path.join(out_dir, f"{stem}_{group}.dat")
        with open(path, "w") as fh:
            fh.write("# " + " ".join(cols) + "\n")
            for row in rows:
                fh.write(" ".join(row[c] for c in cols) + "\n")
        paths.append(path)
    return paths


def _dump_qps(sc, out_dir: str) -> list[str]:
    """Assemble and dump one representative tick's QPs for the scenario."""
    from . import dual_mpc, footstep_mpc, grf_mpc, qp, simulator
    from .gait import schedule_at
    from .heuristic import heuristic_footstep
    from .model import BodyState

    params = sc.params
    sim = simulator.nominal_sim_state(params, sc.body_height)
    state = sim.body_state()
    seg = sc.command_at(sc.duration / 2.0)
    desired = BodyState(
        p=state.p, p_dot=[seg.vx, seg.vy, 0.0], theta=np.zeros(3),
        omega=[0.0, 0.0, seg.wz],
    )
    weights = dual_mpc.DualMpcWeights()
    schedule = schedule_at(sc.gait, 0.0)
    dt = sc.gait.mpc_dt

    tags = []
    grf_prob = grf_mpc.build_grf_problem(
        params, weights.grf, schedule, state, desired, sim.feet, dt
    )
    tag = f"{sc.name}_grf"
    qp.dump_qp(grf_prob.qp, out_dir, tag)
    tags.append(tag)

    if not bool(schedule.contact[0].all()):
        grf_sol = grf_mpc.solve_grf(grf_prob)
        targets = np.array(
            [
                heuristic_footstep(params, sc.gains, state, desired, sc.gait.t_s, leg)
                for leg in range(4)
            ]
        )
        fs_prob = footstep_mpc.build_footstep_problem(
            params, weights.footstep, dual_mpc._window_schedule(schedule),
            BodyState.from_vector(grf_sol.x_at_M), desired,
            grf_sol.u_f_at_M, sim.feet, targets, dt,
        )
        tag = f"{sc.name}_footstep"
        qp.dump_qp(fs_prob.qp, out_dir, tag)
        tags.append(tag)
    return tags


def _check() -> int:
    """Fast self-contained invariant checks (a smoke-level `pytest -k` stand-in)."""
    from . import dual_mpc, gait, heuristic, mpc_core, model, qp, simulator
    from .core_math import StateMatrixPair, discretize_zoh

    rng = np.random.default_rng(0)
    failures = 0

    def report(name: str, ok: bool):
        nonlocal failures
        print(f"[{'PASS' if ok else 'FAIL'}] {name}")
        failures += 0 if ok else 1

    # condensation exactness
    A = rng.normal(size=(4, 4)) * 0.3
    B = rng.normal(size=(4, 2))
    pred = mpc_core.condense(StateMatrixPair(A=A, B=B), 5)
    x0 = rng.normal(size=4)
    U = rng.normal(size=10)
    x = x0.copy()
    X = []
    for k in range(5):
        x = A @ x + B @ U[2 * k : 2 * k + 2]
        X.append(x.copy())
    ok = np.allclose(np.concatenate(X), pred.A_qp @ x0 + pred.B_qp @ U, atol=1e-12)
    report("condensation exactness", ok)

    # cost Hessian positive definite
    w = mpc_core.HorizonWeights()
    params = model.RobotParams()
    sim = simulator.nominal_sim_state(params)
    state = sim.body_state()
    disc = discretize_zoh(model.grf_dynamics(params, state, sim.feet), 0.025)
    P, _ = mpc_core.build_cost(
        mpc_core.condense(disc, 10), w, state.as_vector(),
        np.zeros(13 * 10), np.zeros(12 * 10),
    )
    report("cost Hessian positive definite", qp.check_positive_definite(P))

    # hover fixed point
    cfg = gait.GaitConfig(pattern="stand")
    ctx = dual_mpc.initial_state(params, sim.feet)
    weights = dual_mpc.DualMpcWeights()
    gains = heuristic.HeuristicGains()
    xd = model.BodyState(p=state.p, p_dot=np.zeros(3), theta=np.zeros(3), omega=np.zeros(3))
    cmd1, ctx = dual_mpc.tick(ctx, params, weights, gains, cfg, 0.0, state, xd, sim.feet)
    cmd2, _ = dual_mpc.tick(ctx, params, weights, gains, cfg, 0.05, state, xd, sim.feet)
    ok = (
        np.abs(cmd1.forces[:, 2] - params.weight / 4).max() < 0.01 * params.weight / 4
        and np.abs(cmd2.forces - cmd1.forces).max() < 1e-8
        and np.allclose(cmd1.footsteps, sim.feet)
    )
    report("hover fixed point", ok)

    print("all checks passed" if failures == 0 else f"{failures} check(s) failed")
    return 0 if failures == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
