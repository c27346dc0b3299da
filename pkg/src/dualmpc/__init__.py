"""Dual-MPC quadruped locomotion library and simulation harness."""

from . import (
    core_math,
    dual_mpc,
    errors,
    footstep_mpc,
    gait,
    grf_mpc,
    heuristic,
    model,
    mpc_core,
    qp,
    simulator,
)

__all__ = [
    "core_math",
    "dual_mpc",
    "errors",
    "footstep_mpc",
    "gait",
    "grf_mpc",
    "heuristic",
    "model",
    "mpc_core",
    "qp",
    "simulator",
]

__version__ = "0.1.0"
