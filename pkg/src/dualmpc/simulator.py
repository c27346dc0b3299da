"""Ground-truth single-rigid-body simulator.

Integrates the full nonlinear rotational dynamics (including the gyroscopic
omega x I omega term the controller drops) with semi-implicit Euler steps.
Stance feet transmit the commanded GRF after slip clamping against the local
true friction coefficient; swing feet follow a kinematic interpolant and
latch at touchdown. Terrain regions carry friction, height, and optional
spring-damper compliance.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core_math import hat
from .errors import FallEvent
from .gait import GaitConfig, in_stance, phase_elapsed
from .model import BodyState, RobotParams, foot_positions

SWING_CLEARANCE = 0.05  # m, half-sine apex of the swing foot trajectory
FALL_MIN_CLEARANCE = 0.05  # m of body height above terrain before a fall
FALL_MAX_TILT = 0.6  # rad of roll or pitch before a fall


@dataclass(frozen=True)
class TerrainRegion:
    lo: float
    hi: float
    mu: float
    height: float = 0.0
    stiffness: float = 0.0  # N/m; 0 means rigid
    damping: float = 0.0    # N*s/m
    axis: int = 0           # 0: split along x, 1: along y

    @property
    def compliant(self) -> bool:
        return self.stiffness > 0.0


@dataclass(frozen=True)
class Terrain:
    regions: tuple[TerrainRegion, ...] = (TerrainRegion(-np.inf, np.inf, mu=0.8),)

    def region_at(self, x: float, y: float) -> TerrainRegion:
        coordinate = (x, y)
        for region in self.regions:
            if region.lo <= coordinate[region.axis] < region.hi:
                return region
        # outside the table: nearest region by interval distance
        def dist(r: TerrainRegion) -> float:
            c = coordinate[r.axis]
            return max(r.lo - c, c - r.hi, 0.0)
        return min(self.regions, key=dist)

    def height_at(self, x: float, y: float) -> float:
        return self.region_at(x, y).height


@dataclass(frozen=True)
class Disturbance:
    force: np.ndarray
    torque: np.ndarray
    offset: np.ndarray  # application point, body frame
    t_start: float = 0.0
    t_end: float = np.inf

    def __post_init__(self):
        object.__setattr__(self, "force", np.asarray(self.force, dtype=float).reshape(3))
        object.__setattr__(self, "torque", np.asarray(self.torque, dtype=float).reshape(3))
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=float).reshape(3))
        if self.t_end < self.t_start:
            raise ValueError("disturbance window must be ordered")

    def active(self, t: float) -> bool:
        return self.t_start <= t < self.t_end


@dataclass
class SimState:
    p: np.ndarray
    p_dot: np.ndarray
    R_wb: np.ndarray
    omega: np.ndarray
    feet: np.ndarray            # (4, 3) world
    foot_contact: np.ndarray    # (4,) bool
    t: float = 0.0
    liftoff_feet: np.ndarray = field(default_factory=lambda: np.zeros((4, 3)))
    deflection: np.ndarray = field(default_factory=lambda: np.zeros(4))
    slip_distance: float = 0.0
    slipping: np.ndarray = field(default_factory=lambda: np.zeros(4, dtype=bool))

    def euler(self) -> np.ndarray:
        """Z-Y-X Euler angles (roll, pitch, yaw) of R_wb."""
        R = self.R_wb
        pitch = -np.arcsin(np.clip(R[2, 0], -1.0, 1.0))
        roll = np.arctan2(R[2, 1], R[2, 2])
        yaw = np.arctan2(R[1, 0], R[0, 0])
        return np.array([roll, pitch, yaw])

    def body_state(self) -> BodyState:
        return BodyState(p=self.p, p_dot=self.p_dot, theta=self.euler(), omega=self.omega)


def nominal_sim_state(params: RobotParams, height: float = 0.3) -> SimState:
    """Standing at the origin with feet under the hips."""
    feet = params.hip_offsets.copy()
    feet[:, 2] = 0.0
    return SimState(
        p=np.array([0.0, 0.0, height]),
        p_dot=np.zeros(3),
        R_wb=np.eye(3),
        omega=np.zeros(3),
        feet=feet,
        foot_contact=np.ones(4, dtype=bool),
        liftoff_feet=feet.copy(),
    )


def clamp_slip(f_cmd: np.ndarray, mu_true: float) -> tuple[np.ndarray, bool]:
    """Project a commanded force onto the true friction pyramid."""
    f = np.asarray(f_cmd, dtype=float).reshape(3).copy()
    if f[2] <= 0.0:
        slipped = bool(abs(f[0]) > 0.0 or abs(f[1]) > 0.0 or f[2] < 0.0)
        return np.array([0.0, 0.0, max(f[2], 0.0)]), slipped
    limit = mu_true * f[2]
    tangential = max(abs(f[0]), abs(f[1]))
    if tangential <= limit:
        return f, False
    scale = limit / tangential
    f[0] *= scale
    f[1] *= scale
    return f, True


def _orthonormalize(R: np.ndarray) -> np.ndarray:
    U, _, Vt = np.linalg.svd(R)
    return U @ Vt


def _rodrigues(axis_times_angle: np.ndarray) -> np.ndarray:
    angle = float(np.linalg.norm(axis_times_angle))
    if angle < 1e-12:
        return np.eye(3) + hat(axis_times_angle)
    K = hat(axis_times_angle / angle)
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def touchdown(
    sim: SimState, leg: int, target: np.ndarray, terrain: Terrain
) -> None:
    """Latch a swing foot at its touchdown target (in place)."""
    target = np.asarray(target, dtype=float).reshape(3)
    region = terrain.region_at(target[0], target[1])
    sim.feet[leg] = np.array([target[0], target[1], region.height])
    sim.deflection[leg] = 0.0
    sim.foot_contact[leg] = True


def step(
    sim: SimState,
    cmd,
    terrain: Terrain,
    disturbances: list[Disturbance],
    dt: float,
    params: RobotParams,
    config: GaitConfig,
    slip_speed: float = 0.2,
) -> SimState:
    """Advance the simulation by dt under a held control command."""
    if not (0.0 < dt <= 2e-3):
        raise ValueError(f"dt must be in (0, 2ms], got {dt}")
    sim = replace(
        sim,
        p=sim.p.copy(), p_dot=sim.p_dot.copy(), R_wb=sim.R_wb.copy(),
        omega=sim.omega.copy(), feet=sim.feet.copy(),
        foot_contact=sim.foot_contact.copy(),
        liftoff_feet=sim.liftoff_feet.copy(), deflection=sim.deflection.copy(),
        slipping=sim.slipping.copy(),
    )
    t_new = sim.t + dt

    # contact bookkeeping: liftoff, swing interpolation, touchdown latch
    for leg in range(4):
        stance_now = in_stance(config, t_new, leg)
        if sim.foot_contact[leg] and not stance_now:
            sim.foot_contact[leg] = False
            sim.liftoff_feet[leg] = sim.feet[leg].copy()
            sim.deflection[leg] = 0.0
        elif not sim.foot_contact[leg]:
            target = np.asarray(cmd.footsteps[leg], dtype=float)
            if stance_now:
                touchdown(sim, leg, target, terrain)
            else:
                s = np.clip(phase_elapsed(config, t_new, leg) / config.t_s, 0.0, 1.0)
                blend = 3.0 * s**2 - 2.0 * s**3
                start = sim.liftoff_feet[leg]
                xy = start[:2] + blend * (target[:2] - start[:2])
                z_line = start[2] + blend * (target[2] - start[2])
                sim.feet[leg, :2] = xy
                sim.feet[leg, 2] = z_line + SWING_CLEARANCE * np.sin(np.pi * s)

    # contact forces with slip clamping and compliance
    total_force = np.zeros(3)
    total_torque = np.zeros(3)
    sim.slipping[:] = False
    for leg in range(4):
        if not sim.foot_contact[leg]:
            continue
        f_cmd = np.asarray(cmd.forces[leg], dtype=float).copy()
        region = terrain.region_at(sim.feet[leg, 0], sim.feet[leg, 1])
        if region.compliant:
            # quasi-static spring-damper: the foot settles toward f_z/k
            delta = sim.deflection[leg]
            damping = max(region.damping, 1e-6)
            delta_dot = (f_cmd[2] - region.stiffness * delta) / damping
            sim.deflection[leg] = max(0.0, delta + dt * delta_dot)
            sim.feet[leg, 2] = region.height - sim.deflection[leg]
        f_applied, slipped = clamp_slip(f_cmd, region.mu)
        if slipped:
            sim.slipping[leg] = True
            tangential = f_cmd[:2]
            norm = np.linalg.norm(tangential)
            if norm > 1e-12:
                drift = -slip_speed * dt * tangential / norm
                sim.feet[leg, :2] += drift
                sim.slip_distance += slip_speed * dt
        total_force += f_applied
        total_torque += np.cross(sim.feet[leg] - sim.p, f_applied)

    for dist in disturbances:
        if dist.active(sim.t):
            total_force += dist.force
            total_torque += dist.torque + np.cross(sim.R_wb @ dist.offset, dist.force)

    # semi-implicit Euler, full gyroscopic term kept
    I_w = sim.R_wb @ params.inertia @ sim.R_wb.T
    omega_dot = np.linalg.solve(I_w, total_torque - np.cross(sim.omega, I_w @ sim.omega))
    sim.omega = sim.omega + dt * omega_dot
    sim.p_dot = sim.p_dot + dt * (total_force / params.mass - params.gravity)
    sim.p = sim.p + dt * sim.p_dot
    sim.R_wb = _orthonormalize(_rodrigues(sim.omega * dt) @ sim.R_wb)
    sim.t = t_new

    ground = terrain.height_at(sim.p[0], sim.p[1])
    euler = sim.euler()
    if sim.p[2] < ground + FALL_MIN_CLEARANCE:
        raise FallEvent(f"body height {sim.p[2]:.3f} m below fall threshold at t={sim.t:.3f}")
    if abs(euler[0]) > FALL_MAX_TILT or abs(euler[1]) > FALL_MAX_TILT:
        raise FallEvent(f"tilt exceeded at t={sim.t:.3f} (roll={euler[0]:.2f}, pitch={euler[1]:.2f})")
    return sim
