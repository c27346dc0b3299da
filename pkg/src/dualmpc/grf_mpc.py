"""GRF MPC: optimizes stance-leg ground reaction forces by QP.

Swing legs are equality-pinned to zero force; stance legs are constrained
to a friction pyramid with a vertical force cap. The input reference is
the gravity share split among the stance legs of each step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import mpc_core, qp
from .core_math import discretize_zoh
from .gait import GaitSchedule
from .model import NU, BodyState, RobotParams, grf_dynamics, leg_forces


@dataclass
class GRFProblem:
    schedule: GaitSchedule
    x0: np.ndarray           # (13,) augmented initial state
    dynamics: object         # discrete StateMatrixPair
    qp: qp.CondensedQP
    mpc_dt: float


@dataclass
class GRFSolution:
    U_f: np.ndarray          # stacked 12N
    u_f_now: np.ndarray      # (4, 3) applied this tick
    u_f_at_M: np.ndarray     # (4, 3) transition block
    x_at_M: np.ndarray       # (13,) predicted state entering the transition
    solution: qp.QPSolution


def pyramid_rows(mu: float, fz_max: float) -> tuple[np.ndarray, np.ndarray]:
    """Friction pyramid plus cap for one leg's (fx, fy, fz) block."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    G = np.array(
        [
            [1.0, 0.0, -mu],
            [-1.0, 0.0, -mu],
            [0.0, 1.0, -mu],
            [0.0, -1.0, -mu],
            [0.0, 0.0, -1.0],
            [0.0, 0.0, 1.0],
        ]
    )
    h = np.array([0.0, 0.0, 0.0, 0.0, 0.0, fz_max])
    return G, h


def build_grf_problem(
    params: RobotParams,
    weights: mpc_core.HorizonWeights,
    schedule: GaitSchedule,
    state: BodyState,
    desired: BodyState,
    feet: np.ndarray,
    mpc_dt: float,
    mu: float | None = None,
) -> GRFProblem:
    """Assemble the condensed GRF QP for one tick."""
    mu = params.mu_mpc if mu is None else mu
    N = schedule.contact.shape[0]
    cont = grf_dynamics(params, state, feet)
    disc = discretize_zoh(cont, mpc_dt)
    pred = mpc_core.condense(disc, N)

    contact = schedule.contact
    X_d = mpc_core.desired_state_sequence(desired, N, mpc_dt)
    n_stance = contact.sum(axis=1)
    share = np.where(n_stance > 0, params.weight / np.maximum(n_stance, 1), 0.0)
    U_d = np.zeros((N, 4, 3))
    U_d[:, :, 2] = contact * share[:, None]
    P, q_vec = mpc_core.build_cost(pred, weights, state.as_vector(), X_d, U_d.reshape(-1))

    G_leg, h_leg = pyramid_rows(mu, params.fz_max)
    nvar = NU * N
    flat = contact.reshape(-1)  # (k, leg) in row-major order
    bases = (np.flatnonzero(flat) // 4) * NU + 3 * (np.flatnonzero(flat) % 4)
    G = np.zeros((6 * bases.size, nvar))
    h = np.tile(h_leg, bases.size)
    for r, base in enumerate(bases):
        G[6 * r : 6 * r + 6, base : base + 3] = G_leg
    swing = np.flatnonzero(~flat)
    eq_cols = ((swing // 4) * NU + 3 * (swing % 4))[:, None] + np.arange(3)
    E = np.zeros((eq_cols.size, nvar))
    E[np.arange(eq_cols.size), eq_cols.reshape(-1)] = 1.0

    problem = qp.CondensedQP(
        P=P,
        q=q_vec,
        E=E if eq_cols.size else None,
        c=np.zeros(eq_cols.size) if eq_cols.size else None,
        G=G if bases.size else None,
        h=h if bases.size else None,
    )
    return GRFProblem(
        schedule=schedule,
        x0=state.as_vector(),
        dynamics=disc,
        qp=problem,
        mpc_dt=mpc_dt,
    )


def solve_grf(
    problem: GRFProblem, tol: float = 1e-8, hold_steps: int = 1
) -> GRFSolution:
    """Solve the GRF QP; extract the applied and transition blocks.

    The applied command is the mean of the first ``hold_steps`` horizon
    blocks. When the command is zero-order held for longer than one
    horizon step, averaging the blocks spanning the hold matches the
    planned impulse over that interval; applying block 0 alone for the
    whole hold over-corrects and destabilizes the rate loop. The blocks
    averaged share one contact set within the window, so each sees the
    same pyramid and the average stays feasible by convexity.

    ``x_at_M`` is the plan's rollout to the transition step: the initial
    state of the footstep planner's shifted window.
    """
    if hold_steps < 1:
        raise ValueError("hold_steps must be >= 1")
    sol = qp.solve(problem.qp, tol=tol)
    schedule = problem.schedule
    N = schedule.contact.shape[0]
    blocks = sol.u_star.reshape(N, 4, 3)
    m = min(schedule.M, N - 1)
    # average only blocks that share step 0's contact set; past a phase
    # switch the blocks belong to different stance legs
    n_avg = 1
    while (
        n_avg < min(hold_steps, N)
        and bool(np.all(schedule.contact[n_avg] == schedule.contact[0]))
    ):
        n_avg += 1
    held = blocks[:n_avg].mean(axis=0)
    x = problem.x0.copy()
    for k in range(m):
        x = problem.dynamics.A @ x + problem.dynamics.B @ blocks[k].ravel()
    return GRFSolution(
        U_f=sol.u_star,
        u_f_now=leg_forces(held),
        u_f_at_M=leg_forces(blocks[m]),
        x_at_M=x,
        solution=sol,
    )
