"""Built-in scenario presets and the sectioned key-value scenario format."""

from __future__ import annotations

import configparser
from dataclasses import replace

import numpy as np

from .errors import ConfigParse
from .gait import GaitConfig
from .model import RobotParams
from .runner import CommandSegment, Scenario
from .simulator import Disturbance, Terrain, TerrainRegion


def _ramp_profile(
    vx: float, t_start: float = 0.5, rate: float = 0.5, steps: int = 10
) -> tuple[CommandSegment, ...]:
    """Staircase ramp to vx after a standing settle.

    A hard velocity step excites a large transient at the first phase
    transition; ramping at ``rate`` m/s^2 in small increments keeps the
    start-up gentle for every controller mode.
    """
    t_ramp = abs(vx) / rate
    segs = [CommandSegment(0.0, 0.0, 0.0, 0.0)]
    for i in range(1, steps + 1):
        segs.append(
            CommandSegment(t_start + (i - 1) * t_ramp / steps, vx * i / steps, 0.0, 0.0)
        )
    return tuple(segs)


def preset(name: str, mode: str = "dual", seed: int = 0) -> Scenario:
    """Named experiment setups mirroring the evaluated terrain classes."""
    if name == "stand":
        return Scenario(
            name="stand",
            gait=GaitConfig(pattern="stand"),
            mode=mode,
            profile=(CommandSegment(0.0, 0.0, 0.0, 0.0),),
            duration=5.0,
            seed=seed,
        )
    if name == "flat":
        return Scenario(
            name="flat",
            gait=GaitConfig(pattern="trot", t_s=0.25, horizon=10),
            mode=mode,
            profile=_ramp_profile(0.3),
            duration=5.0,
            seed=seed,
        )
    if name == "asym_friction":
        # low-friction strip under the left feet, high friction on the right;
        # the controller's mu is deliberately optimistic on the left side
        terrain = Terrain(
            regions=(
                TerrainRegion(lo=0.0, hi=np.inf, mu=0.25, axis=1),
                TerrainRegion(lo=-np.inf, hi=0.0, mu=0.8, axis=1),
            )
        )
        return Scenario(
            name="asym_friction",
            params=RobotParams(mu_mpc=0.5),
            gait=GaitConfig(pattern="trot", t_s=0.25, horizon=10),
            mode=mode,
            profile=_ramp_profile(0.5),
            terrain=terrain,
            duration=6.0,
            seed=seed,
        )
    if name == "wrench":
        dist = Disturbance(
            force=[0.0, -6.0, -14.0],
            torque=[1.6, 0.0, 0.1],
            offset=[0.0, 0.0, 0.0],
            t_start=1.0,
        )
        return Scenario(
            name="wrench",
            gait=GaitConfig(pattern="trot", t_s=0.25, horizon=10),
            mode=mode,
            profile=_ramp_profile(0.3),
            disturbances=(dist,),
            duration=6.0,
            seed=seed,
        )
    if name == "compliant":
        terrain = Terrain(
            regions=(
                TerrainRegion(lo=-np.inf, hi=np.inf, mu=0.6,
                              stiffness=4000.0, damping=150.0),
            )
        )
        return Scenario(
            name="compliant",
            gait=GaitConfig(pattern="trot", t_s=0.25, horizon=10),
            mode=mode,
            profile=_ramp_profile(0.35),
            terrain=terrain,
            duration=6.0,
            seed=seed,
        )
    raise ConfigParse(f"unknown preset {name!r}")


PRESET_NAMES = ("stand", "flat", "asym_friction", "wrench", "compliant")


def _parse_floats(text: str) -> list[float]:
    return [float(tok) for tok in text.replace(",", " ").split()]


def load_scenario(path: str) -> Scenario:
    """Read a scenario from a sectioned key-value file.

    Sections: [scenario] (name, mode, duration, seed, dmpc_hz, sim_dt,
    body_height, preset), [robot] (same keys as the robot parameter file),
    [gait] (pattern, t_s, horizon), [command] (profile = t:vx,vy,wz; ...),
    [terrain] (regionN = lo hi mu height stiffness damping axis),
    [disturbance] (distN = fx fy fz tx ty tz ox oy oz t0 t1).
    """
    cp = configparser.ConfigParser()
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigParse(f"{path}: {exc}") from exc

    base_name = cp.get("scenario", "preset", fallback=None)
    sc = preset(base_name) if base_name else Scenario()
    kw = {}
    if cp.has_section("scenario"):
        s = cp["scenario"]
        kw["name"] = s.get("name", sc.name)
        kw["mode"] = s.get("mode", sc.mode)
        kw["duration"] = s.getfloat("duration", sc.duration)
        kw["seed"] = s.getint("seed", sc.seed)
        kw["dmpc_hz"] = s.getfloat("dmpc_hz", sc.dmpc_hz)
        kw["sim_dt"] = s.getfloat("sim_dt", sc.sim_dt)
        kw["body_height"] = s.getfloat("body_height", sc.body_height)
    if cp.has_section("gait"):
        g = cp["gait"]
        kw["gait"] = GaitConfig(
            pattern=g.get("pattern", sc.gait.pattern),
            t_s=g.getfloat("t_s", sc.gait.t_s),
            horizon=g.getint("horizon", sc.gait.horizon),
        )
    if cp.has_section("robot"):
        r = cp["robot"]
        p = sc.params
        kw["params"] = RobotParams(
            mass=r.getfloat("mass", p.mass),
            inertia=p.inertia,
            hip_offsets=p.hip_offsets,
            mu_mpc=r.getfloat("mu_mpc", p.mu_mpc),
            fz_max=r.getfloat("fz_max", p.fz_max),
            workspace_halfwidth=r.getfloat("workspace_halfwidth", p.workspace_halfwidth),
        )
    if cp.has_section("command") and cp.has_option("command", "profile"):
        segments = []
        for chunk in cp.get("command", "profile").split(";"):
            chunk = chunk.strip()
            if not chunk:
                continue
            t_part, vals = chunk.split(":")
            vx, vy, wz = _parse_floats(vals)
            segments.append(CommandSegment(float(t_part), vx, vy, wz))
        if segments:
            kw["profile"] = tuple(sorted(segments, key=lambda s: s.t_start))
    if cp.has_section("terrain"):
        regions = []
        for key in sorted(cp["terrain"]):
            vals = _parse_floats(cp.get("terrain", key))
            vals += [0.0] * (7 - len(vals))
            regions.append(
                TerrainRegion(lo=vals[0], hi=vals[1], mu=vals[2], height=vals[3],
                              stiffness=vals[4], damping=vals[5], axis=int(vals[6]))
            )
        if regions:
            kw["terrain"] = Terrain(regions=tuple(regions))
    if cp.has_section("disturbance"):
        dists = []
        for key in sorted(cp["disturbance"]):
            vals = _parse_floats(cp.get("disturbance", key))
            vals += [0.0] * (10 - len(vals))
            if len(vals) < 11:
                vals.append(np.inf)
            dists.append(
                Disturbance(force=vals[0:3], torque=vals[3:6], offset=vals[6:9],
                            t_start=vals[9], t_end=vals[10])
            )
        if dists:
            kw["disturbances"] = tuple(dists)
    try:
        return replace(sc, **kw)
    except (TypeError, ValueError) as exc:
        raise ConfigParse(f"{path}: {exc}") from exc


def get_scenario(spec: str, mode: str | None = None, seed: int | None = None) -> Scenario:
    """Resolve a preset name or scenario file path, with CLI overrides."""
    if spec in PRESET_NAMES:
        sc = preset(spec)
    else:
        sc = load_scenario(spec)
    if mode is not None:
        sc = replace(sc, mode=mode)
    if seed is not None:
        sc = replace(sc, seed=seed)
    return sc
