"""Closed-loop scenario execution, metrics, and comparison reports.

A Scenario pairs a robot, gait, controller mode, command profile, terrain,
and disturbances. `run` closes the Dual-MPC (or heuristic baseline) over
the simulator, writes a deterministic tick-level CSV trace, and computes
tracking/GRF/timing metrics. Wall-clock solve times are reported in the
metrics and benchmark output but kept out of the trace so that repeated
runs with the same seed are byte-identical.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import dual_mpc, simulator
from .core_math import rot_z
from .errors import ConfigParse, FallEvent, MismatchedScenarios
from .gait import GaitConfig
from .heuristic import HeuristicGains
from .model import BodyState, RobotParams

MSE_KEYS = (
    "mse_bvx", "mse_bvy", "mse_bvz",
    "mse_roll", "mse_pitch", "mse_yaw",
    "mse_wx", "mse_wy", "mse_wz",
)
LEG_KEYS = ("rf", "lf", "rh", "lh")
FZ_MIN_RATIO = 1.0  # N; force-ratio samples below this vertical load are dropped


@dataclass(frozen=True)
class CommandSegment:
    t_start: float
    vx: float
    vy: float
    wz: float


@dataclass(frozen=True)
class Scenario:
    name: str = "flat"
    params: RobotParams = field(default_factory=RobotParams)
    gait: GaitConfig = field(default_factory=GaitConfig)
    mode: str = "dual"  # dual | baseline | baseline_fast
    profile: tuple[CommandSegment, ...] = (CommandSegment(0.0, 0.0, 0.0, 0.0),)
    terrain: simulator.Terrain = field(default_factory=simulator.Terrain)
    disturbances: tuple[simulator.Disturbance, ...] = ()
    duration: float = 5.0
    seed: int = 0
    dmpc_hz: float = 20.0
    sim_dt: float = 1e-3
    body_height: float = 0.3
    gains: HeuristicGains = field(default_factory=HeuristicGains)

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.mode not in ("dual", "baseline", "baseline_fast"):
            raise ValueError(f"unknown controller mode {self.mode!r}")

    def command_at(self, t: float) -> CommandSegment:
        active = self.profile[0]
        for seg in self.profile:
            if seg.t_start <= t:
                active = seg
        return active


@dataclass
class MetricsReport:
    mse: dict[str, float]
    grf_mag_mean: dict[str, float]
    grf_mag_std: dict[str, float]
    force_ratio: dict[str, float]
    grf_time_ms: tuple[float, float, float]        # mean, std, max
    footstep_time_ms: tuple[float, float, float]
    slip_distance: float
    fell: bool
    ticks: int

    def flat(self) -> dict[str, float]:
        out = dict(self.mse)
        for leg in LEG_KEYS:
            out[f"grf_mag_mean_{leg}"] = self.grf_mag_mean[leg]
            out[f"grf_mag_std_{leg}"] = self.grf_mag_std[leg]
            out[f"force_ratio_{leg}"] = self.force_ratio[leg]
        out["slip_distance"] = self.slip_distance
        return out

    def as_text(self) -> str:
        lines = ["metric                     value"]
        for key, val in self.flat().items():
            lines.append(f"{key:<26} {val: .6g}")
        lines.append(f"{'grf_time_ms (mean/std/max)':<26} "
                     f"{self.grf_time_ms[0]:.3f}/{self.grf_time_ms[1]:.3f}/{self.grf_time_ms[2]:.3f}")
        lines.append(f"{'fs_time_ms (mean/std/max)':<26} "
                     f"{self.footstep_time_ms[0]:.3f}/{self.footstep_time_ms[1]:.3f}/{self.footstep_time_ms[2]:.3f}")
        lines.append(f"{'ticks':<26} {self.ticks}")
        lines.append(f"{'fell':<26} {self.fell}")
        return "\n".join(lines)


def _initial_sim(scenario: Scenario) -> simulator.SimState:
    sim = simulator.nominal_sim_state(scenario.params, scenario.body_height)
    rng = np.random.default_rng(scenario.seed)
    # seeded initial perturbation so independent seeds give independent runs
    sim.p_dot = sim.p_dot + rng.normal(0.0, 0.02, 3)
    sim.omega = sim.omega + rng.normal(0.0, 0.02, 3)
    tilt = rng.normal(0.0, 0.01, 2)
    R = rot_z(0.0)
    sim.R_wb = simulator._rodrigues(np.array([tilt[0], tilt[1], 0.0])) @ R
    for leg in range(4):
        sim.feet[leg, 2] = scenario.terrain.height_at(*sim.feet[leg, :2])
    return sim


def _controller_gait(scenario: Scenario) -> tuple[GaitConfig, float]:
    """Gait config and replan rate, honoring the fast-baseline variant."""
    if scenario.mode == "baseline_fast":
        return replace(scenario.gait, t_s=0.2), 25.0
    return scenario.gait, scenario.dmpc_hz


_TRACE_HEADER = (
    ["t"]
    + [f"{v}_{a}" for v in ("p", "pdot", "theta", "omega") for a in "xyz"]
    + [f"d_{v}_{a}" for v in ("p", "pdot", "theta", "omega") for a in "xyz"]
    + [f"f_{leg}_{a}" for leg in LEG_KEYS for a in "xyz"]
    + [f"pb_{leg}_{a}" for leg in LEG_KEYS for a in "xyz"]
    + ["M", "slip_any", "slip_distance"]
)


def run(
    scenario: Scenario,
    out_dir: str | None = None,
    trace: bool = True,
    time_sink: list | None = None,
) -> tuple[MetricsReport, str | None]:
    """Execute the closed loop; return metrics and the trace path."""
    params = scenario.params
    gait_cfg, dmpc_hz = _controller_gait(scenario)
    tick_every = max(1, round(1.0 / (dmpc_hz * scenario.sim_dt)))
    # force command is held for this many horizon steps between replans
    hold_steps = max(1, round(1.0 / (dmpc_hz * gait_cfg.mpc_dt)))

    sim = _initial_sim(scenario)
    ctx = dual_mpc.initial_state(params, sim.feet)
    weights = dual_mpc.DualMpcWeights()
    tick_fn = dual_mpc.tick if scenario.mode == "dual" else dual_mpc.baseline_tick

    desired_p = sim.p.copy()
    desired_yaw = 0.0
    cmd = None
    fell = False
    rows = []
    samples = []  # per tick: (err9, forces (4,3))
    grf_times, fs_times = [], []

    n_steps = int(round(scenario.duration / scenario.sim_dt))
    for step_idx in range(n_steps):
        t = step_idx * scenario.sim_dt
        seg = scenario.command_at(t)
        v_world = rot_z(desired_yaw) @ np.array([seg.vx, seg.vy, 0.0])
        desired = BodyState(
            p=[desired_p[0], desired_p[1], scenario.body_height],
            p_dot=v_world,
            theta=[0.0, 0.0, desired_yaw],
            omega=[0.0, 0.0, seg.wz],
        )

        if step_idx % tick_every == 0:
            x0 = sim.body_state()
            heights = np.array(
                [scenario.terrain.height_at(*sim.feet[leg, :2]) for leg in range(4)]
            )
            cmd, ctx = tick_fn(
                ctx, params, weights, scenario.gains, gait_cfg, t, x0, desired,
                sim.feet, terrain_heights=heights, hold_steps=hold_steps,
            )
            grf_times.append(cmd.diagnostics.grf_solve_time)
            fs_times.append(cmd.diagnostics.footstep_solve_time)
            if time_sink is not None:
                time_sink.append(
                    (cmd.diagnostics.grf_solve_time, cmd.diagnostics.footstep_solve_time)
                )

            R_wb = sim.R_wb
            bvel = R_wb.T @ sim.p_dot
            bvel_d = R_wb.T @ v_world
            theta = x0.theta
            err = np.concatenate([
                bvel - bvel_d,
                [theta[0], theta[1], _angle_diff(theta[2], desired_yaw)],
                sim.omega - desired.omega,
            ])
            # roll/pitch desired are zero; stored errors are vs. desired
            samples.append((err, cmd.forces.copy()))
            if trace:
                rows.append(
                    [t]
                    + list(sim.p) + list(sim.p_dot) + list(theta) + list(sim.omega)
                    + list(desired.p) + list(desired.p_dot)
                    + list(desired.theta) + list(desired.omega)
                    + list(cmd.forces.reshape(-1))
                    + list(cmd.footsteps.reshape(-1))
                    + [cmd.diagnostics.M, int(sim.slipping.any()), sim.slip_distance]
                )

        try:
            sim = simulator.step(
                sim, cmd, scenario.terrain, list(scenario.disturbances),
                scenario.sim_dt, params, gait_cfg,
            )
        except FallEvent:
            fell = True
            break

        desired_p = desired_p + scenario.sim_dt * v_world
        desired_yaw += scenario.sim_dt * seg.wz

    report = _metrics(samples, grf_times, fs_times, sim.slip_distance, fell)
    trace_path = None
    if trace and out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        trace_path = os.path.join(
            out_dir, f"{scenario.name}_{scenario.mode}_seed{scenario.seed}.csv"
        )
        with open(trace_path, "w", newline="") as fh:
            fh.write(format_trace(rows))
    return report, trace_path


def format_trace(rows: list[list[float]]) -> str:
    """Render trace rows as CSV text with fixed, reproducible formatting."""
    buf = io.StringIO()
    buf.write(",".join(_TRACE_HEADER) + "\n")
    for row in rows:
        buf.write(",".join(f"{v:.12g}" for v in row) + "\n")
    return buf.getvalue()


def _angle_diff(a: float, b: float) -> float:
    return float(np.arctan2(np.sin(a - b), np.cos(a - b)))


def _time_stats(times: list[float]) -> tuple[float, float, float]:
    if not times:
        return (0.0, 0.0, 0.0)
    arr = 1e3 * np.asarray(times)
    return (float(arr.mean()), float(arr.std()), float(arr.max()))


def _metrics(samples, grf_times, fs_times, slip_distance, fell) -> MetricsReport:
    if samples:
        errs = np.array([s[0] for s in samples])
        mse_vals = (errs**2).mean(axis=0)
    else:
        mse_vals = np.zeros(9)
    mse = dict(zip(MSE_KEYS, (float(v) for v in mse_vals)))

    mag_mean, mag_std, ratio = {}, {}, {}
    for li, leg in enumerate(LEG_KEYS):
        forces = np.array([s[1][li] for s in samples]) if samples else np.zeros((0, 3))
        loaded = forces[forces[:, 2] >= FZ_MIN_RATIO] if len(forces) else forces
        if len(loaded):
            mags = np.linalg.norm(loaded, axis=1)
            mag_mean[leg] = float(mags.mean())
            mag_std[leg] = float(mags.std())
            ratio[leg] = float(np.mean(np.abs(loaded[:, 0]) / loaded[:, 2]))
        else:
            mag_mean[leg] = mag_std[leg] = ratio[leg] = 0.0

    return MetricsReport(
        mse=mse,
        grf_mag_mean=mag_mean,
        grf_mag_std=mag_std,
        force_ratio=ratio,
        grf_time_ms=_time_stats(grf_times),
        footstep_time_ms=_time_stats(fs_times),
        slip_distance=float(slip_distance),
        fell=fell,
        ticks=len(samples),
    )


def _scenario_key(s: Scenario) -> tuple:
    """Hashable fingerprint of everything except the controller mode."""
    return (
        s.name, s.gait, s.profile, s.terrain, s.duration, s.seed,
        s.dmpc_hz, s.sim_dt, s.body_height,
        tuple(
            (tuple(d.force), tuple(d.torque), tuple(d.offset), d.t_start, d.t_end)
            for d in s.disturbances
        ),
        s.params.mass, s.params.mu_mpc,
        tuple(s.params.inertia.reshape(-1)),
        tuple(s.params.hip_offsets.reshape(-1)),
    )


def compare(a: Scenario, b: Scenario, out_dir: str | None = None):
    """Run both scenarios and report per-metric deltas (a - b) / b."""
    if _scenario_key(a) != _scenario_key(b):
        raise MismatchedScenarios("scenarios may only differ in controller mode")
    rep_a, _ = run(a, out_dir=out_dir)
    rep_b, _ = run(b, out_dir=out_dir)
    deltas = {}
    flat_a, flat_b = rep_a.flat(), rep_b.flat()
    for key in flat_a:
        base = flat_b[key]
        deltas[key] = (flat_a[key] - base) / base if base != 0.0 else float("nan")
    return rep_a, rep_b, deltas


def comparison_table(deltas: dict[str, float], mode_a: str, mode_b: str) -> str:
    lines = [f"metric delta ({mode_a} - {mode_b}) / {mode_b}"]
    for key, val in deltas.items():
        pct = "nan" if np.isnan(val) else f"{100.0 * val:+.1f}%"
        lines.append(f"{key:<26} {pct}")
    return "\n".join(lines)


def bench(scenario: Scenario, repetitions: int = 10) -> dict:
    """Timing study: per-QP build+solve wall times across closed-loop ticks.

    `repetitions` is the minimum number of tick samples; the scenario is
    re-run (with stepped seeds) until enough ticks are collected.
    """
    if repetitions < 10:
        raise ValueError("repetitions must be >= 10")
    sink: list[tuple[float, float]] = []
    runs = 0
    while len(sink) < repetitions and runs < 100:
        run(replace(scenario, seed=scenario.seed + runs), trace=False, time_sink=sink)
        runs += 1
    arr = 1e3 * np.asarray(sink)
    grf, fs = arr[:, 0], arr[:, 1]
    total = grf + fs

    def stats(v):
        return (float(v.mean()), float(v.std()), float(v.max()))

    return {
        "grf_ms": stats(grf),
        "footstep_ms": stats(fs),
        "tick_ms": stats(total),
        "samples": len(sink),
    }
