"""Velocity-feedback reference footstep law.

The target combines the hip position projected forward by half a swing,
a velocity-error feedback term, and a yaw-rate turning correction scaled
by the capture-point time constant sqrt(p_z / g).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonPositiveHeight
from .model import BodyState, RobotParams
from .core_math import perp


@dataclass(frozen=True)
class HeuristicGains:
    k: np.ndarray = field(default_factory=lambda: np.array([0.03, 0.03, 0.0]))
    touchdown_height_mode: str = "terrain_zero"  # or "queried_height"

    def __post_init__(self):
        object.__setattr__(self, "k", np.asarray(self.k, dtype=float).reshape(3))
        if np.any(self.k < 0):
            raise ValueError("gains must be nonnegative")


def heuristic_footstep(
    params: RobotParams,
    gains: HeuristicGains,
    state: BodyState,
    desired: BodyState,
    t_s: float,
    leg: int,
    terrain_height: float = 0.0,
) -> np.ndarray:
    """Reference touchdown target for one leg, world frame.

    p_b^d = p_hip + (t_s/2) p_dot + k (p_dot^d - p_dot)
            + (omega_z^d / 2) sqrt(p_z / g) perp(p_dot)
    with the z-component overridden by the terrain height.
    """
    p_z = float(state.p[2])
    if p_z <= 0.0:
        raise NonPositiveHeight(f"body height {p_z} must be positive")
    g = float(np.linalg.norm(params.gravity))
    p_hip = state.p + state.rotation() @ params.hip_offsets[leg]
    target = (
        p_hip
        + 0.5 * t_s * state.p_dot
        + gains.k * (desired.p_dot - state.p_dot)
        + 0.5 * desired.omega[2] * np.sqrt(p_z / g) * perp(state.p_dot)
    )
    target[2] = terrain_height
    return target
