"""Per-tick coupling of the GRF and footstep MPCs.

Each tick runs one GRF-QP (moment arms from the previous tick's committed
footsteps), feeds its transition-block forces into the footstep dynamics,
solves the footstep QP, and commits the transition-block footsteps for the
next tick. Convergence of the pair happens across ticks.

The footstep QP covers the shifted window starting at the transition step
M, over which every leg keeps its current phase label: current stance legs
stay pinned at their contact points and the current swing legs' touchdown
targets are the free variables.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import footstep_mpc, grf_mpc, mpc_core
from .errors import DualMpcError
from .gait import GaitConfig, GaitSchedule, schedule_at
from .heuristic import HeuristicGains, heuristic_footstep
from .model import NU, BodyState, RobotParams, foot_positions


# sagittal offset (m) applied to the footstep planner's touchdown
# references, along the commanded heading; see the note in tick()
REFERENCE_SHIFT = 0.01


def _advance_desired(desired: BodyState, tau: float) -> BodyState:
    """Reference state tau seconds ahead: integrate velocity and yaw rate."""
    theta = desired.theta.copy()
    theta[2] += desired.omega[2] * tau
    return BodyState(
        p=desired.p + desired.p_dot * tau,
        p_dot=desired.p_dot,
        theta=theta,
        omega=desired.omega,
    )


@dataclass(frozen=True)
class DualMpcWeights:
    grf: mpc_core.HorizonWeights = field(
        default_factory=lambda: mpc_core.HorizonWeights(
            R=np.full(NU, mpc_core.DEFAULT_R_GRF)
        )
    )
    footstep: mpc_core.HorizonWeights = field(
        default_factory=lambda: mpc_core.HorizonWeights(
            Q=mpc_core.DEFAULT_Q_FOOTSTEP.copy(),
            R=np.tile(mpc_core.DEFAULT_R_FOOTSTEP, 4),
        )
    )


@dataclass
class TickDiagnostics:
    M: int
    contact: np.ndarray
    grf_solve_time: float
    footstep_solve_time: float
    grf_kkt: float
    footstep_kkt: float
    grf_fallback: bool = False
    footstep_fallback: bool = False


@dataclass
class ControlCommand:
    forces: np.ndarray      # (4, 3), zero-order held until the next tick
    footsteps: np.ndarray   # (4, 3) touchdown targets / contact points
    diagnostics: TickDiagnostics


@dataclass(frozen=True)
class DualMpcState:
    last_footsteps: np.ndarray
    last_forces_at_M: np.ndarray
    last_forces: np.ndarray
    tick_count: int = 0


def initial_state(params: RobotParams, feet: np.ndarray) -> DualMpcState:
    """Nominal controller memory: current feet, gravity-share forces."""
    share = np.zeros((4, 3))
    share[:, 2] = params.weight / 4.0
    return DualMpcState(
        last_footsteps=foot_positions(feet).copy(),
        last_forces_at_M=share.copy(),
        last_forces=share.copy(),
        tick_count=0,
    )


def _window_schedule(schedule: GaitSchedule) -> GaitSchedule:
    """Constant-label contact table for the footstep QP's shifted window."""
    N = schedule.contact.shape[0]
    return GaitSchedule(contact=np.tile(schedule.contact[0], (N, 1)), M=schedule.M)


def _clip_to_workspace(
    params: RobotParams, state: BodyState, targets: np.ndarray
) -> np.ndarray:
    """Clamp targets to the body-frame workspace box (x,y), keep z."""
    R = state.rotation()
    out = targets.copy()
    for leg in range(4):
        local = R.T @ (targets[leg] - state.p)
        center = params.hip_offsets[leg, :2]
        w = params.workspace_halfwidth
        clipped = np.clip(local[:2], center - w, center + w)
        if not np.allclose(clipped, local[:2]):
            world = state.p + R @ np.array([clipped[0], clipped[1], local[2]])
            out[leg, :2] = world[:2]
    return out


def _solve_grf_with_fallback(
    params, weights, schedule, state, desired, feet, mpc_dt, ctx, hold_steps
):
    try:
        prob = grf_mpc.build_grf_problem(
            params, weights.grf, schedule, state, desired, feet, mpc_dt
        )
        return grf_mpc.solve_grf(prob, hold_steps=hold_steps), False
    except DualMpcError:
        pass
    try:
        # one-shot relaxation of the friction pyramid
        prob = grf_mpc.build_grf_problem(
            params, weights.grf, schedule, state, desired, feet, mpc_dt,
            mu=1.1 * params.mu_mpc,
        )
        return grf_mpc.solve_grf(prob, hold_steps=hold_steps), True
    except DualMpcError:
        sol = grf_mpc.GRFSolution(
            U_f=np.zeros(NU * schedule.contact.shape[0]),
            u_f_now=ctx.last_forces.copy(),
            u_f_at_M=ctx.last_forces_at_M.copy(),
            x_at_M=state.as_vector(),
            solution=None,
        )
        return sol, True


def tick(
    ctx: DualMpcState,
    params: RobotParams,
    weights: DualMpcWeights,
    gains: HeuristicGains,
    config: GaitConfig,
    t: float,
    x0: BodyState,
    x_desired: BodyState,
    current_feet: np.ndarray,
    terrain_heights: np.ndarray | None = None,
    hold_steps: int = 1,
) -> tuple[ControlCommand, DualMpcState]:
    """One pass of the mutual-feedback loop.

    ``hold_steps`` is how many horizon steps the emitted force command
    will be zero-order held before the next tick; the command is the
    average of that many leading plan blocks.
    """
    current_feet = foot_positions(current_feet)
    if terrain_heights is None:
        terrain_heights = np.zeros(4)
    schedule = schedule_at(config, t)
    stance = schedule.contact[0]
    dt = config.mpc_dt

    t_grf = time.perf_counter()
    feet_for_grf = np.where(stance[:, None], current_feet, ctx.last_footsteps)
    grf_sol, grf_fell_back = _solve_grf_with_fallback(
        params, weights, schedule, x0, x_desired, feet_for_grf, dt, ctx,
        hold_steps,
    )
    grf_time = time.perf_counter() - t_grf

    # the footstep window starts at the transition step: plan from the GRF
    # rollout's predicted state there, against the reference advanced to M.
    # The heuristic anchor stays on the measured state: under slip the
    # rollout is optimistic, and anchoring to it compounds the model error.
    m_eff = min(schedule.M, schedule.contact.shape[0] - 1)
    x_at_M = BodyState.from_vector(grf_sol.x_at_M)
    desired_at_M = _advance_desired(x_desired, m_eff * dt)
    targets = np.array(
        [
            heuristic_footstep(
                params, gains, x0, x_desired, config.t_s, leg,
                terrain_height=terrain_heights[leg],
            )
            for leg in range(4)
        ]
    )
    # shift every touchdown reference along the commanded heading: keeping
    # the support polygon slightly ahead of the body unloads the leading
    # legs, trading a little speed tracking for lower tangential-force
    # demand on every stance leg
    yaw_d = float(x_desired.theta[2])
    heading = np.array([np.cos(yaw_d), np.sin(yaw_d)])
    targets[:, :2] += REFERENCE_SHIFT * heading

    fs_fell_back = False
    fs_time = 0.0
    fs_kkt = 0.0
    if bool(stance.all()):
        footsteps = current_feet.copy()
    else:
        t_fs = time.perf_counter()
        try:
            fs_prob = footstep_mpc.build_footstep_problem(
                params, weights.footstep, _window_schedule(schedule), x_at_M,
                desired_at_M, grf_sol.u_f_at_M, current_feet, targets, dt,
            )
            fs_sol = footstep_mpc.solve_footstep(fs_prob)
            footsteps = fs_sol.u_p_at_M
            fs_kkt = fs_sol.solution.kkt_residual
        except DualMpcError:
            footsteps = np.where(
                stance[:, None], current_feet,
                _clip_to_workspace(params, x_at_M, targets),
            )
            fs_fell_back = True
        fs_time = time.perf_counter() - t_fs

    diag = TickDiagnostics(
        M=schedule.M,
        contact=stance.copy(),
        grf_solve_time=grf_time,
        footstep_solve_time=fs_time,
        grf_kkt=grf_sol.solution.kkt_residual if grf_sol.solution else np.inf,
        footstep_kkt=fs_kkt,
        grf_fallback=grf_fell_back,
        footstep_fallback=fs_fell_back,
    )
    # stance legs get the held plan; swing legs carry the transition-block
    # force so a touchdown before the next tick is supported immediately
    forces_cmd = np.where(stance[:, None], grf_sol.u_f_now, grf_sol.u_f_at_M)
    cmd = ControlCommand(
        forces=forces_cmd, footsteps=footsteps, diagnostics=diag
    )
    new_ctx = DualMpcState(
        last_footsteps=np.where(stance[:, None], current_feet, footsteps),
        last_forces_at_M=grf_sol.u_f_at_M.copy(),
        last_forces=grf_sol.u_f_now.copy(),
        tick_count=ctx.tick_count + 1,
    )
    return cmd, new_ctx


def baseline_tick(
    ctx: DualMpcState,
    params: RobotParams,
    weights: DualMpcWeights,
    gains: HeuristicGains,
    config: GaitConfig,
    t: float,
    x0: BodyState,
    x_desired: BodyState,
    current_feet: np.ndarray,
    terrain_heights: np.ndarray | None = None,
    hold_steps: int = 1,
) -> tuple[ControlCommand, DualMpcState]:
    """Heuristic footsteps + the same GRF QP; no footstep QP."""
    current_feet = foot_positions(current_feet)
    if terrain_heights is None:
        terrain_heights = np.zeros(4)
    schedule = schedule_at(config, t)
    stance = schedule.contact[0]
    dt = config.mpc_dt

    t_grf = time.perf_counter()
    feet_for_grf = np.where(stance[:, None], current_feet, ctx.last_footsteps)
    grf_sol, grf_fell_back = _solve_grf_with_fallback(
        params, weights, schedule, x0, x_desired, feet_for_grf, dt, ctx,
        hold_steps,
    )
    grf_time = time.perf_counter() - t_grf

    targets = np.array(
        [
            heuristic_footstep(
                params, gains, x0, x_desired, config.t_s, leg,
                terrain_height=terrain_heights[leg],
            )
            for leg in range(4)
        ]
    )
    footsteps = np.where(
        stance[:, None], current_feet, _clip_to_workspace(params, x0, targets)
    )

    diag = TickDiagnostics(
        M=schedule.M,
        contact=stance.copy(),
        grf_solve_time=grf_time,
        footstep_solve_time=0.0,
        grf_kkt=grf_sol.solution.kkt_residual if grf_sol.solution else np.inf,
        footstep_kkt=0.0,
        grf_fallback=grf_fell_back,
    )
    forces_cmd = np.where(stance[:, None], grf_sol.u_f_now, grf_sol.u_f_at_M)
    cmd = ControlCommand(
        forces=forces_cmd, footsteps=footsteps, diagnostics=diag
    )
    new_ctx = DualMpcState(
        last_footsteps=np.where(stance[:, None], current_feet, footsteps),
        last_forces_at_M=grf_sol.u_f_at_M.copy(),
        last_forces=grf_sol.u_f_now.copy(),
        tick_count=ctx.tick_count + 1,
    )
    return cmd, new_ctx
