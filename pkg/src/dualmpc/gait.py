"""Contact scheduling over the prediction horizon.

A trot alternates the diagonal pairs {RF, LH} and {LF, RH} with a 50% duty
cycle; stance and swing both last t_s. The transition index M is the first
horizon row whose contact pattern differs from row 0 (M = N when the whole
horizon shares one pattern).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PAIR_A = (0, 3)  # RF, LH
PAIR_B = (1, 2)  # LF, RH


@dataclass(frozen=True)
class GaitConfig:
    pattern: str = "trot"  # "trot" | "stand"
    t_s: float = 0.25
    horizon: int = 10

    def __post_init__(self):
        if self.pattern not in ("trot", "stand"):
            raise ValueError(f"unknown gait pattern {self.pattern!r}")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.t_s <= 0:
            raise ValueError("t_s must be positive")

    @property
    def mpc_dt(self) -> float:
        # one horizon spans exactly one phase
        return self.t_s / self.horizon


@dataclass(frozen=True)
class GaitSchedule:
    contact: np.ndarray  # (N, 4) bool, True = stance
    M: int


def _trot_row(config: GaitConfig, t: float) -> np.ndarray:
    phase = int(np.floor(t / config.t_s)) % 2
    row = np.zeros(4, dtype=bool)
    row[list(PAIR_A if phase == 0 else PAIR_B)] = True
    return row


def schedule_at(config: GaitConfig, t: float) -> GaitSchedule:
    """Contact table for horizon steps starting at time t."""
    N = config.horizon
    if config.pattern == "stand":
        return GaitSchedule(contact=np.ones((N, 4), dtype=bool), M=N)
    dt = config.mpc_dt
    # sample mid-step to keep boundaries unambiguous under float division
    rows = np.array([_trot_row(config, t + (k + 0.5) * dt) for k in range(N)])
    M = N
    for k in range(1, N):
        if not np.array_equal(rows[k], rows[0]):
            M = k
            break
    return GaitSchedule(contact=rows, M=M)


def phase_elapsed(config: GaitConfig, t: float, leg: int) -> float:
    """Time since the leg's current phase (stance or swing) began.

    All legs share phase boundaries (stance and swing both last t_s), so
    this is t modulo t_s regardless of the leg.
    """
    return t % config.t_s


def in_stance(config: GaitConfig, t: float, leg: int) -> bool:
    """Contact flag of one leg at time t."""
    if config.pattern == "stand":
        return True
    return bool(_trot_row(config, t)[leg])
