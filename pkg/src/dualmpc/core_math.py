"""Frame-independent vector/matrix primitives.

Everything here is a pure function on numpy arrays: skew (hat) operator,
elementary and Z-Y-X Euler rotations, the planar perpendicular operator,
and exact zero-order-hold discretization of (A, B) pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import DegenerateOrientation, NonFinite

PITCH_GUARD = 0.05  # rad of margin kept away from the pi/2 gimbal singularity


@dataclass(frozen=True)
class StateMatrixPair:
    """Continuous- or discrete-time (A, B) with consistent dimensions."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        B = np.asarray(self.B, dtype=float)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got {A.shape}")
        if B.ndim != 2 or B.shape[0] != A.shape[0]:
            raise ValueError(f"B rows must match A, got {B.shape} vs {A.shape}")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]


def hat(a) -> np.ndarray:
    """Skew-symmetric matrix S such that S @ b == cross(a, b)."""
    x, y, z = np.asarray(a, dtype=float).reshape(3)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def rot_x(phi: float) -> np.ndarray:
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(psi: float) -> np.ndarray:
    """Counterclockwise rotation about the z-axis."""
    c, s = np.cos(psi), np.sin(psi)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_zyx(theta, pitch_guard: float = PITCH_GUARD) -> np.ndarray:
    """Body-to-world rotation from Z-Y-X Euler angles (roll, pitch, yaw).

    Raises DegenerateOrientation when |pitch| is within `pitch_guard` of
    pi/2; the Euler-rate approximation assumes near-zero pitch anyway.
    """
    roll, pitch, yaw = np.asarray(theta, dtype=float).reshape(3)
    if abs(pitch) >= np.pi / 2.0 - pitch_guard:
        raise DegenerateOrientation(f"pitch {pitch:.4f} rad too close to singularity")
    return rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)


def perp(a) -> np.ndarray:
    """Planar perpendicular: -e_z x a = (a_y, -a_x, 0)."""
    x, y, _ = np.asarray(a, dtype=float).reshape(3)
    return np.array([y, -x, 0.0])


def discretize_zoh(cont: StateMatrixPair, dt: float) -> StateMatrixPair:
    """Exact zero-order-hold discretization via the augmented block exponential.

    exp([[A, B], [0, 0]] * dt) = [[A_d, B_d], [0, I]].
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not (np.all(np.isfinite(cont.A)) and np.all(np.isfinite(cont.B))):
        raise NonFinite("state matrices contain non-finite entries")
    n, m = cont.n, cont.m
    blk = np.zeros((n + m, n + m))
    blk[:n, :n] = cont.A
    blk[:n, n:] = cont.B
    E = expm(blk * dt)
    return StateMatrixPair(A=E[:n, :n], B=E[:n, n:])
