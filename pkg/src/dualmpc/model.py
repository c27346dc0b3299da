"""Robot parameters and the continuous-time state-space builders.

State layout (13-dim augmented vector):
    x = [p(3), p_dot(3), theta(3), omega(3), 1]
Legs are indexed 0=RF, 1=LF, 2=RH, 3=LH.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core_math import StateMatrixPair, hat, rot_z, rot_zyx
from .errors import ConfigParse

NX = 13  # augmented state dimension
NU = 12  # 4 legs x 3 components (footsteps or forces)

# state slice indices
POS = slice(0, 3)
VEL = slice(3, 6)
ANG = slice(6, 9)
RATE = slice(9, 12)
AUG = 12

LEG_NAMES = ("rf", "lf", "rh", "lh")


@dataclass(frozen=True)
class RobotParams:
    """Physical constants of the platform plus controller-side bounds.

    Defaults are GO1-class placeholders; they are configuration, never
    test oracles.
    """

    mass: float = 12.0
    inertia: np.ndarray = field(
        default_factory=lambda: np.diag([0.1, 0.25, 0.3])
    )
    hip_offsets: np.ndarray = field(
        default_factory=lambda: np.array(
            [
                [0.19, -0.13, 0.0],   # RF
                [0.19, 0.13, 0.0],    # LF
                [-0.19, -0.13, 0.0],  # RH
                [-0.19, 0.13, 0.0],   # LH
            ]
        )
    )
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 9.81]))
    mu_mpc: float = 0.5
    fz_max: float = 1.5 * 12.0 * 9.81
    # half-width of the capture-point proximity band, per body axis (m);
    # derived from the body's velocity limit over half a swing: v_max * t_s / 2
    cp_halfwidth: np.ndarray = field(default_factory=lambda: np.array([0.125, 0.125]))
    # explicit per-leg band override [-dp_max, -dp_min] on body-frame x,y;
    # shape (4, 2, 2) = leg x (min_bound, max_bound) x (x, y). None derives
    # a band of +/- cp_halfwidth centered at each hip offset.
    cp_band: np.ndarray | None = None
    workspace_halfwidth: float = 0.15

    def __post_init__(self):
        object.__setattr__(self, "inertia", np.asarray(self.inertia, dtype=float))
        object.__setattr__(self, "hip_offsets", np.asarray(self.hip_offsets, dtype=float))
        object.__setattr__(self, "gravity", np.asarray(self.gravity, dtype=float))
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if not np.allclose(self.inertia, self.inertia.T):
            raise ValueError("inertia must be symmetric")
        if np.any(np.linalg.eigvalsh(self.inertia) <= 0):
            raise ValueError("inertia must be positive definite")
        if self.mu_mpc <= 0:
            raise ValueError("mu_mpc must be positive")

    def cp_bounds(self, leg: int) -> tuple[np.ndarray, np.ndarray]:
        """Body-frame x,y band [lo, hi] on the capture-point-shifted footstep.

        The band is centered at the leg's hip offset so that every leg has a
        reachable set; an explicit cp_band overrides the derived one.
        """
        if self.cp_band is not None:
            lo, hi = self.cp_band[leg]
            return np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
        center = self.hip_offsets[leg, :2]
        return center - self.cp_halfwidth, center + self.cp_halfwidth

    @property
    def weight(self) -> float:
        return self.mass * float(np.linalg.norm(self.gravity))


@dataclass
class BodyState:
    """Augmented body state x = [p, p_dot, theta, omega, 1]."""

    p: np.ndarray
    p_dot: np.ndarray
    theta: np.ndarray  # Z-Y-X Euler angles (roll, pitch, yaw)
    omega: np.ndarray  # world frame

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float).reshape(3)
        self.p_dot = np.asarray(self.p_dot, dtype=float).reshape(3)
        self.theta = np.asarray(self.theta, dtype=float).reshape(3)
        self.omega = np.asarray(self.omega, dtype=float).reshape(3)

    def as_vector(self) -> np.ndarray:
        x = np.empty(NX)
        x[POS] = self.p
        x[VEL] = self.p_dot
        x[ANG] = self.theta
        x[RATE] = self.omega
        x[AUG] = 1.0
        return x

    @classmethod
    def from_vector(cls, x) -> "BodyState":
        x = np.asarray(x, dtype=float).reshape(NX)
        return cls(p=x[POS], p_dot=x[VEL], theta=x[ANG], omega=x[RATE])

    @property
    def yaw(self) -> float:
        return float(self.theta[2])

    def rotation(self) -> np.ndarray:
        return rot_zyx(self.theta)


def leg_forces(f) -> np.ndarray:
    """Normalize a per-leg force table to shape (4, 3)."""
    f = np.asarray(f, dtype=float).reshape(4, 3)
    return f


def foot_positions(p_b) -> np.ndarray:
    """Normalize a per-leg foot position table to shape (4, 3)."""
    return np.asarray(p_b, dtype=float).reshape(4, 3)


def world_inertia(params: RobotParams, theta) -> np.ndarray:
    """Inertia rotated into the world frame: R I_body R^T."""
    R = rot_zyx(theta)
    return R @ params.inertia @ R.T


def footstep_dynamics(
    params: RobotParams, state: BodyState, forces: np.ndarray
) -> StateMatrixPair:
    """Continuous dynamics with footsteps as the input.

    The GRFs, yaw, and body position are frozen at their tick values so the
    system is time-invariant over the horizon; angular acceleration comes
    from the moment expansion -sum(hat(f_i) p_b_i) - hat(p) sum(f_i).
    """
    forces = leg_forces(forces)
    f_sum = forces.sum(axis=0)
    I_w = world_inertia(params, state.theta)
    I_inv = np.linalg.inv(I_w)

    A = np.zeros((NX, NX))
    A[POS, VEL] = np.eye(3)
    A[VEL, AUG] = f_sum / params.mass - params.gravity
    A[ANG, RATE] = rot_z(state.yaw).T
    A[RATE, AUG] = -I_inv @ hat(state.p) @ f_sum

    B = np.zeros((NX, NU))
    for i in range(4):
        B[RATE, 3 * i : 3 * i + 3] = -I_inv @ hat(forces[i])
    return StateMatrixPair(A=A, B=B)


def grf_dynamics(
    params: RobotParams, state: BodyState, feet: np.ndarray
) -> StateMatrixPair:
    """Continuous dynamics with GRFs as the input (foot placements frozen)."""
    feet = foot_positions(feet)
    I_w = world_inertia(params, state.theta)
    I_inv = np.linalg.inv(I_w)

    A = np.zeros((NX, NX))
    A[POS, VEL] = np.eye(3)
    A[VEL, AUG] = -params.gravity
    A[ANG, RATE] = rot_z(state.yaw).T

    B = np.zeros((NX, NU))
    for i in range(4):
        r = feet[i] - state.p
        B[VEL, 3 * i : 3 * i + 3] = np.eye(3) / params.mass
        B[RATE, 3 * i : 3 * i + 3] = I_inv @ hat(r)
    return StateMatrixPair(A=A, B=B)


def load_params(path: str) -> RobotParams:
    """Read a flat key-value robot parameter file.

    Recognized keys: mass, inertia_xx/yy/zz/xy/xz/yz, hip_{rf,lf,rh,lh}_{x,y,z},
    gravity_z, mu_mpc, fz_max, cp_halfwidth_x/y, workspace_halfwidth.
    Lines are `key = value`; '#' starts a comment.
    """
    kv: dict[str, float] = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigParse(f"{path}:{lineno}: expected 'key = value'")
                key, val = (s.strip() for s in line.split("=", 1))
                kv[key] = float(val)
    except OSError as exc:
        raise ConfigParse(str(exc)) from exc
    except ValueError as exc:
        raise ConfigParse(f"{path}: {exc}") from exc

    defaults = RobotParams()
    inertia = defaults.inertia.copy()
    for idx, name in (((0, 0), "xx"), ((1, 1), "yy"), ((2, 2), "zz")):
        if f"inertia_{name}" in kv:
            inertia[idx] = kv[f"inertia_{name}"]
    for (i, j), name in (((0, 1), "xy"), ((0, 2), "xz"), ((1, 2), "yz")):
        if f"inertia_{name}" in kv:
            inertia[i, j] = inertia[j, i] = kv[f"inertia_{name}"]
    hips = defaults.hip_offsets.copy()
    for li, leg in enumerate(LEG_NAMES):
        for ci, comp in enumerate("xyz"):
            key = f"hip_{leg}_{comp}"
            if key in kv:
                hips[li, ci] = kv[key]
    cp = defaults.cp_halfwidth.copy()
    if "cp_halfwidth_x" in kv:
        cp[0] = kv["cp_halfwidth_x"]
    if "cp_halfwidth_y" in kv:
        cp[1] = kv["cp_halfwidth_y"]
    mass = kv.get("mass", defaults.mass)
    g_z = kv.get("gravity_z", 9.81)
    return RobotParams(
        mass=mass,
        inertia=inertia,
        hip_offsets=hips,
        gravity=np.array([0.0, 0.0, g_z]),
        mu_mpc=kv.get("mu_mpc", defaults.mu_mpc),
        fz_max=kv.get("fz_max", 1.5 * mass * g_z),
        cp_halfwidth=cp,
        workspace_halfwidth=kv.get("workspace_halfwidth", defaults.workspace_halfwidth),
    )
