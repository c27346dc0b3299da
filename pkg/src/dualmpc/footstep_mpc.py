"""Footstep MPC: plans touchdown targets by QP.

Stance legs are equality-pinned to their contact points; swing legs get one
decision point per swing segment (tied across its horizon steps, z pinned
to terrain height) constrained to a capture-point proximity band and a
kinematic workspace box, both rotated into the world frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import mpc_core, qp
from .core_math import discretize_zoh
from .errors import NonPositiveHeight
from .gait import GaitSchedule
from .model import NU, NX, BodyState, RobotParams, foot_positions, footstep_dynamics


@dataclass
class FootstepProblem:
    schedule: GaitSchedule
    current_feet: np.ndarray
    heuristic_targets: np.ndarray
    qp: qp.CondensedQP
    mpc_dt: float


@dataclass
class FootstepSolution:
    U_p: np.ndarray          # stacked 12N
    u_p_at_M: np.ndarray     # (4, 3) committed touchdown targets
    solution: qp.QPSolution


def _leg_segments(contact_col: np.ndarray) -> list[tuple[int, int, bool]]:
    """Contiguous (start, end_exclusive, in_stance) runs of one leg's column."""
    segments = []
    start = 0
    for k in range(1, len(contact_col) + 1):
        if k == len(contact_col) or contact_col[k] != contact_col[start]:
            segments.append((start, k, bool(contact_col[start])))
            start = k
    return segments


def cp_inequality(
    params: RobotParams, state: BodyState, leg: int
) -> tuple[np.ndarray, np.ndarray]:
    """World-frame rows A p_b <= b for the capture-point proximity band.

    Body-frame band lo <= R'(p_b - p)_xy - R'(p_dot)_xy sqrt(p_z/g) <= hi,
    expanded to four one-sided rows acting on the world-frame footstep.
    """
    p_z = float(state.p[2])
    if p_z <= 0.0:
        raise NonPositiveHeight(f"body height {p_z} must be positive")
    g = float(np.linalg.norm(params.gravity))
    Rt = state.rotation().T
    cp_offset = (Rt @ state.p_dot)[:2] * np.sqrt(p_z / g)
    lo, hi = params.cp_bounds(leg)
    Sxy = Rt[:2, :]  # body-frame x,y rows
    base = Sxy @ state.p
    A = np.vstack([Sxy, -Sxy])
    b = np.concatenate([hi + cp_offset + base, -(lo + cp_offset + base)])
    return A, b


def workspace_inequality(
    params: RobotParams, state: BodyState, leg: int
) -> tuple[np.ndarray, np.ndarray]:
    """World-frame rows keeping the footstep inside the leg's body-frame box."""
    Rt = state.rotation().T
    Sxy = Rt[:2, :]
    center = params.hip_offsets[leg, :2]
    w = params.workspace_halfwidth
    base = Sxy @ state.p
    A = np.vstack([Sxy, -Sxy])
    b = np.concatenate([center + w + base, -(center - w) - base])
    return A, b


def build_footstep_problem(
    params: RobotParams,
    weights: mpc_core.HorizonWeights,
    schedule: GaitSchedule,
    state: BodyState,
    desired: BodyState,
    forces_at_M: np.ndarray,
    current_feet: np.ndarray,
    heuristic_targets: np.ndarray,
    mpc_dt: float,
    terrain_height: float = 0.0,
) -> FootstepProblem:
    """Assemble the condensed footstep QP for one tick."""
    current_feet = foot_positions(current_feet)
    heuristic_targets = foot_positions(heuristic_targets)
    N = schedule.contact.shape[0]

    cont = footstep_dynamics(params, state, forces_at_M)
    disc = discretize_zoh(cont, mpc_dt)
    pred = mpc_core.condense(disc, N)

    X_d = mpc_core.desired_state_sequence(desired, N, mpc_dt)
    anchors = np.where(
        schedule.contact[:, :, None], current_feet[None], heuristic_targets[None]
    )
    P, q_vec = mpc_core.build_cost(
        pred, weights, state.as_vector(), X_d, anchors.reshape(-1)
    )

    def var(k, leg: int):
        return k * NU + 3 * leg

    nvar = NU * N
    segments = [
        (leg, seg)
        for leg in range(4)
        for seg in _leg_segments(schedule.contact[:, leg])
    ]
    n_eq = sum(
        3 * (end - start) if stance else 3 * (end - start - 1) + 1
        for _, (start, end, stance) in segments
    )
    n_ineq = sum(8 for _, (_, _, stance) in segments if not stance)
    E = np.zeros((n_eq, nvar))
    c = np.zeros(n_eq)
    G = np.zeros((n_ineq, nvar))
    h = np.zeros(n_ineq)
    ei = gi = 0
    for leg, (start, end, stance) in segments:
        if stance:
            # pin every stance step of this leg to its contact point
            cols = (var(np.arange(start, end), leg)[:, None] + np.arange(3)).ravel()
            rows = np.arange(ei, ei + cols.size)
            E[rows, cols] = 1.0
            c[rows] = np.tile(current_feet[leg], end - start)
            ei += cols.size
            continue
        # a swing segment has one touchdown point: tie later steps to the
        # first, pin its z to terrain height, constrain x,y in the band
        later = np.arange(start + 1, end)
        if later.size:
            cols = (var(later, leg)[:, None] + np.arange(3)).ravel()
            rows = np.arange(ei, ei + cols.size)
            E[rows, cols] = 1.0
            E[rows, np.tile(var(start, leg) + np.arange(3), later.size)] = -1.0
            ei += cols.size
        E[ei, var(start, leg) + 2] = 1.0
        c[ei] = terrain_height
        ei += 1
        for A_leg, b_leg in (
            cp_inequality(params, state, leg),
            workspace_inequality(params, state, leg),
        ):
            G[gi : gi + 4, var(start, leg) : var(start, leg) + 3] = A_leg
            h[gi : gi + 4] = b_leg
            gi += 4

    problem = qp.CondensedQP(
        P=P,
        q=q_vec,
        E=E if n_eq else None,
        c=c if n_eq else None,
        G=G if n_ineq else None,
        h=h if n_ineq else None,
    )
    return FootstepProblem(
        schedule=schedule,
        current_feet=current_feet,
        heuristic_targets=heuristic_targets,
        qp=problem,
        mpc_dt=mpc_dt,
    )


def solve_footstep(problem: FootstepProblem, tol: float = 1e-8) -> FootstepSolution:
    """Solve the footstep QP and extract the committed transition block."""
    sol = qp.solve(problem.qp, tol=tol)
    N = problem.schedule.contact.shape[0]
    blocks = sol.u_star.reshape(N, 4, 3)
    m = min(problem.schedule.M, N - 1)
    return FootstepSolution(U_p=sol.u_star, u_p_at_M=blocks[m].copy(), solution=sol)
