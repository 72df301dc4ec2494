"""Gait metrics reported per trial and consumed by the regressions."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np

from .simulate import Trajectory, TrialVerdict, attitude_amplitudes, stride_crossings


@dataclass(frozen=True)
class TrialResult:
    """Flat per-trial record: one row of the scaling study tables."""

    name: str
    leg_length: float
    mass: float
    mass_exponent: float
    verdict: TrialVerdict
    velocity: float = math.nan
    stride_frequency: float = math.nan
    peak_torque: float = math.nan
    froude: float = math.nan
    min_required_torque: Optional[float] = None
    theta_r: tuple[float, float] = (math.nan, math.nan)
    theta_p: tuple[float, float] = (math.nan, math.nan)
    theta_y: tuple[float, float] = (math.nan, math.nan)

    def to_record(self) -> dict:
        d = asdict(self)
        verdict = d.pop("verdict")
        d["outcome"] = verdict["outcome"]
        d["convergence_time"] = verdict["convergence_time"]
        d["strides_analyzed"] = verdict["strides_analyzed"]
        for key in ("theta_r", "theta_p", "theta_y"):
            mean, std = d.pop(key)
            d[key + "_mean"] = mean
            d[key + "_std"] = std
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True)


CSV_FIELDS = (
    "name", "leg_length", "mass", "mass_exponent", "outcome", "convergence_time",
    "strides_analyzed", "velocity", "stride_frequency", "peak_torque", "froude",
    "min_required_torque", "theta_r_mean", "theta_r_std", "theta_p_mean",
    "theta_p_std", "theta_y_mean", "theta_y_std",
)


def results_to_csv(results, path) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(CSV_FIELDS) + "\n")
        for r in results:
            rec = r.to_record()
            row = []
            for key in CSV_FIELDS:
                val = rec.get(key)
                if val is None:
                    row.append("")
                elif isinstance(val, float):
                    row.append(f"{val:.17g}")
                else:
                    row.append(str(val))
            fh.write(",".join(row) + "\n")


def mean_velocity(traj: Trajectory, t_start: float = -math.inf, t_end: float = math.inf) -> float:
    """Mean walking speed over an integer number of strides.

    Net horizontal displacement of the CoM between the first and last stride
    boundary in the window, along the mean heading (the direction of that
    net displacement), divided by the elapsed time.  Invariant to rotating
    the whole trajectory about the vertical axis.
    """
    w = traj.window(t_start, t_end)
    crossings = stride_crossings(w)
    if len(crossings) < 2:
        raise ValueError("need at least one complete stride to measure velocity")
    t0, t1 = crossings[0], crossings[-1]
    t = w.t
    com = w.com
    x0 = np.interp(t0, t, com[:, 0]), np.interp(t0, t, com[:, 1])
    x1 = np.interp(t1, t, com[:, 0]), np.interp(t1, t, com[:, 1])
    dist = math.hypot(x1[0] - x0[0], x1[1] - x0[1])
    return dist / (t1 - t0)


def stride_frequency(traj: Trajectory, t_start: float = -math.inf) -> float:
    """Strides per second from the stride-boundary spacing."""
    crossings = stride_crossings(traj.window(t_start=t_start))
    if len(crossings) < 2:
        raise ValueError("need at least one complete stride")
    return (len(crossings) - 1) / (crossings[-1] - crossings[0])


def froude(v: float, leg_length: float, gravity: float = 9.81) -> float:
    """Dimensionless speed v / sqrt(g L) (square-root form)."""
    if leg_length <= 0.0:
        raise ValueError("leg length must be positive")
    return v / math.sqrt(gravity * leg_length)


def peak_torque(traj: Trajectory, t_start: float = -math.inf, t_end: float = math.inf) -> float:
    """Largest magnitude of the total applied hip torque over the window.

    The hardstop reaction is part of the applied torque for bang-bang drives,
    so impulsive stops count toward the requirement.
    """
    w = traj.window(t_start, t_end)
    if len(w) == 0:
        raise ValueError("empty analysis window")
    return float(np.max(np.abs(w.hip_torque)))


def result_from_trial(
    design,
    mass_exponent: float,
    traj: Trajectory,
    verdict: TrialVerdict,
    min_required_torque: Optional[float] = None,
) -> TrialResult:
    """Assemble the per-trial record; gait metrics only for stable trials."""
    base = dict(
        name=design.name,
        leg_length=design.leg_length,
        mass=design.total_mass,
        mass_exponent=mass_exponent,
        verdict=verdict,
        min_required_torque=min_required_torque,
    )
    if not verdict.stable:
        return TrialResult(**base)
    t_conv = verdict.convergence_time
    v = mean_velocity(traj, t_start=t_conv)
    amps = attitude_amplitudes(traj, t_start=t_conv, min_strides=min(5, max(1, verdict.strides_analyzed)))
    return TrialResult(
        velocity=v,
        stride_frequency=stride_frequency(traj, t_start=t_conv),
        peak_torque=peak_torque(traj, t_start=t_conv),
        froude=froude(v, design.leg_length, design.gravity),
        theta_r=amps["roll"],
        theta_p=amps["pitch"],
        theta_y=amps["yaw"],
        **base,
    )
