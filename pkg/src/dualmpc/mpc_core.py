"""Shared MPC machinery: horizon condensation and quadratic cost assembly.

Condensing the N-step prediction X = A_qp x0 + B_qp U turns the optimal
control problem into a QP purely in the stacked input U. The cost uses
diagonal stage weights:

    P = 2 (B_qp' Q B_qp + R)
    q = 2 (B_qp' Q (A_qp x0 - X_d) - R U_d)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core_math import StateMatrixPair
from .model import NU, NX

DEFAULT_Q = np.array(
    [10.0, 10.0, 50.0, 10.0, 10.0, 10.0, 400.0, 400.0, 100.0, 4.0, 4.0, 4.0, 0.0]
)
# Footstep-planner state weights: relative to the force planner the
# attitude weights come down and the body-rate weights go up.  Footstep
# corrections only act after touchdown, roughly half a gait cycle after
# they are planned, so weighting the angle alone chases errors with that
# transport delay and anti-damps a roll/pitch sway at the gait frequency.
# Weighting the rate (the derivative of the tracked angle) is phase lead
# for the same loop and damps that mode.
DEFAULT_Q_FOOTSTEP = np.array(
    [10.0, 10.0, 50.0, 10.0, 10.0, 10.0, 100.0, 100.0, 100.0, 40.0, 40.0, 4.0, 0.0]
)
# Per-axis footstep deviation weight (x, y, z), tiled across the four legs.
# The state-cost sensitivity of attitude to a foothold accumulated over
# the horizon is of order 1e5-1e6 per metre squared, so an anchor weight
# above that pins the axis to the reference and one below it leaves the
# axis to the planner.  Sagittal placement is pinned: letting the planner
# chase predicted errors along the direction of travel feeds the delayed
# sway loop described above and buys nothing the reference does not
# already provide.  Lateral placement keeps moderate freedom: sideways
# pushes and asymmetric friction are exactly where optimized placement
# beats the velocity heuristic, and the capture-point proximity band
# bounds how far the planner can wander.
DEFAULT_R_FOOTSTEP = (1.1e7, 300.0, 1.0)
DEFAULT_R_GRF = 1e-6


@dataclass(frozen=True)
class HorizonWeights:
    """Diagonal stage weights, constant across the horizon."""

    Q: np.ndarray = field(default_factory=lambda: DEFAULT_Q.copy())
    R: np.ndarray = field(default_factory=lambda: np.tile(DEFAULT_R_FOOTSTEP, 4))

    def __post_init__(self):
        object.__setattr__(self, "Q", np.asarray(self.Q, dtype=float).reshape(NX))
        object.__setattr__(self, "R", np.asarray(self.R, dtype=float).reshape(NU))
        if np.any(self.R <= 0):
            raise ValueError("all input weights must be strictly positive")
        if np.any(self.Q < 0):
            raise ValueError("state weights must be nonnegative")

    def stacked(self, N: int) -> tuple[np.ndarray, np.ndarray]:
        """Diagonals of the block-diagonal Q (13N) and R (12N)."""
        return np.tile(self.Q, N), np.tile(self.R, N)


@dataclass(frozen=True)
class CondensedPrediction:
    A_qp: np.ndarray  # (nx*N, nx)
    B_qp: np.ndarray  # (nx*N, nu*N), lower block triangular

    @property
    def N(self) -> int:
        return self.A_qp.shape[0] // self.A_qp.shape[1]


def condense(discrete: StateMatrixPair, N: int) -> CondensedPrediction:
    """Stack the N-step prediction matrices from a discrete (A_d, B_d)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    nx, nu = discrete.n, discrete.m
    A_d, B_d = discrete.A, discrete.B
    A_qp = np.zeros((nx * N, nx))
    B_qp = np.zeros((nx * N, nu * N))
    A_pow = np.eye(nx)  # A_d^k
    for k in range(N):
        # row block k holds x_{k+1}: A_d^{k+1} x0 + sum_j A_d^{k-j} B_d u_j
        if k > 0:
            B_qp[k * nx : (k + 1) * nx, nu:] = B_qp[(k - 1) * nx : k * nx, :-nu]
        B_qp[k * nx : (k + 1) * nx, : nu] = A_pow @ B_d if k > 0 else B_d
        A_pow = A_d @ A_pow
        A_qp[k * nx : (k + 1) * nx] = A_pow
    return CondensedPrediction(A_qp=A_qp, B_qp=B_qp)


def build_cost(
    pred: CondensedPrediction,
    weights: HorizonWeights,
    x0: np.ndarray,
    X_desired: np.ndarray,
    U_desired: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Hessian and linear term of the condensed tracking objective."""
    N = pred.N
    q_diag, r_diag = weights.stacked(N)
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    X_desired = np.asarray(X_desired, dtype=float).reshape(-1)
    U_desired = np.asarray(U_desired, dtype=float).reshape(-1)
    BtQ = pred.B_qp.T * q_diag  # B_qp' Q with diagonal Q
    P = 2.0 * (BtQ @ pred.B_qp + np.diag(r_diag))
    P = 0.5 * (P + P.T)
    q = 2.0 * (BtQ @ (pred.A_qp @ x0 - X_desired) - r_diag * U_desired)
    return P, q


def desired_state_sequence(desired, N: int, dt: float) -> np.ndarray:
    """Stacked reference states x_1..x_N from a desired BodyState.

    Position integrates the desired velocity; yaw integrates the desired
    yaw rate; the remaining components are held constant.
    """
    x_d = desired.as_vector()
    X = np.tile(x_d, N)
    for k in range(N):
        tau = (k + 1) * dt
        X[k * NX + 0 : k * NX + 3] = x_d[0:3] + tau * x_d[3:6]
        X[k * NX + 8] = x_d[8] + tau * x_d[11]
    return X


def stage_objective(
    pred: CondensedPrediction,
    weights: HorizonWeights,
    x0: np.ndarray,
    X_desired: np.ndarray,
    U_desired: np.ndarray,
    U: np.ndarray,
) -> float:
    """Stage-wise sum of the tracking objective; oracle for (P, q)."""
    N = pred.N
    nx = pred.A_qp.shape[1]
    nu = pred.B_qp.shape[1] // N
    X = pred.A_qp @ x0 + pred.B_qp @ U
    total = 0.0
    for k in range(N):
        ex = X_desired[k * nx : (k + 1) * nx] - X[k * nx : (k + 1) * nx]
        eu = U_desired[k * nu : (k + 1) * nu] - U[k * nu : (k + 1) * nu]
        total += ex @ (weights.Q * ex) + eu @ (weights.R * eu)
    return float(total)
