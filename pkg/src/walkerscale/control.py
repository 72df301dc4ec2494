"""Hip actuation: sinusoidal position tracking and clocked bang-bang.

Both strategies drive the single hip joint open-loop at a fixed frequency.
The sine tracker runs a clamped PD around a commanded hip trajectory; the
bang-bang variant applies a constant torque whose sign flips with a square
wave, with stiff spring-damper hardstops limiting the swing to +/- phi_max.
Bang-bang switching is clocked (a square wave at f), not triggered by the
hardstop contact; that choice is documented in the project notes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Union


@dataclass(frozen=True)
class SinusoidalPosition:
    """PD tracking of q_cmd = amplitude * sin(2 pi f t), torque clamped."""

    amplitude: float  # rad
    frequency: float  # Hz
    kp: float  # N*m/rad
    kd: float  # N*m*s/rad
    torque_limit: float  # N*m

    def __post_init__(self):
        _check_common(self.frequency, self.amplitude, self.torque_limit)


@dataclass(frozen=True)
class BangBang:
    """Clocked square-wave torque with mechanical hardstops at +/- hardstop_angle."""

    torque: float  # N*m
    frequency: float  # Hz
    hardstop_angle: float  # rad
    hardstop_stiffness: float  # N*m/rad
    hardstop_damping: float  # N*m*s/rad

    def __post_init__(self):
        _check_common(self.frequency, self.hardstop_angle, self.torque)
        if self.hardstop_stiffness < 0.0 or self.hardstop_damping < 0.0:
            raise ValueError("hardstop gains must be non-negative")


ControllerSpec = Union[SinusoidalPosition, BangBang]


def _check_common(frequency: float, angle: float, torque: float) -> None:
    if frequency <= 0.0:
        raise ValueError("controller frequency must be positive")
    if not 0.0 < angle < math.pi / 2.0:
        raise ValueError("controller angle parameter must lie in (0, pi/2)")
    if torque <= 0.0:
        raise ValueError("controller torque parameter must be positive")


def hardstop_torque(q: float, qdot: float, phi_max: float, stiffness: float, damping: float) -> float:
    """Unilateral spring-damper engaging beyond +/- phi_max; zero inside."""
    if q > phi_max:
        return -stiffness * (q - phi_max) - damping * qdot
    if q < -phi_max:
        return -stiffness * (q + phi_max) - damping * qdot
    return 0.0


def controller_torque(spec: ControllerSpec, t: float, q: float, qdot: float) -> float:
    """Commanded hip torque at time t given the measured joint state."""
    if isinstance(spec, SinusoidalPosition):
        omega = 2.0 * math.pi * spec.frequency
        q_cmd = spec.amplitude * math.sin(omega * t)
        qd_cmd = spec.amplitude * omega * math.cos(omega * t)
        tau = spec.kp * (q_cmd - q) + spec.kd * (qd_cmd - qdot)
        return min(max(tau, -spec.torque_limit), spec.torque_limit)
    if isinstance(spec, BangBang):
        s = math.sin(2.0 * math.pi * spec.frequency * t)
        tau = spec.torque * float(np_sign(s))
        tau += hardstop_torque(q, qdot, spec.hardstop_angle, spec.hardstop_stiffness, spec.hardstop_damping)
        return tau
    raise TypeError(f"unknown controller spec {type(spec).__name__}")


def np_sign(x: float) -> float:
    # tiny local sign to keep numpy out of this hot-ish path
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


def torque_amplitude(spec: ControllerSpec) -> float:
    """The torque knob a minimum-torque search should turn."""
    if isinstance(spec, SinusoidalPosition):
        return spec.torque_limit
    return spec.torque


def with_torque_amplitude(spec: ControllerSpec, value: float) -> ControllerSpec:
    """Return a copy with the searched torque amplitude replaced."""
    if value <= 0.0:
        raise ValueError("torque amplitude must be positive")
    if isinstance(spec, SinusoidalPosition):
        return replace(spec, torque_limit=value)
    return replace(spec, torque=value)


def scale_controller(spec: ControllerSpec, s: float, law, torque_scale: float = 1.0) -> ControllerSpec:
    """Rescale a controller for a geometrically scaled walker.

    Frequency follows f ∝ s**frequency_exponent (default -1/2, so the
    dimensionless rate f*sqrt(L/g) is preserved).  Angles are dimensionless
    and unchanged.  Torque-dimension gains multiply by torque_scale, which
    the experiment layer usually sets to the m*L ratio; damping gains pick up
    an extra sqrt(s) because their unit carries one power of time.
    """
    if s <= 0.0:
        raise ValueError("scale factor must be positive")
    if torque_scale <= 0.0:
        raise ValueError("torque_scale must be positive")
    f_scale = s**law.frequency_exponent
    time_scale = math.sqrt(s)
    if isinstance(spec, SinusoidalPosition):
        return SinusoidalPosition(
            amplitude=spec.amplitude,
            frequency=spec.frequency * f_scale,
            kp=spec.kp * torque_scale,
            kd=spec.kd * torque_scale * time_scale,
            torque_limit=spec.torque_limit * torque_scale,
        )
    if isinstance(spec, BangBang):
        return BangBang(
            torque=spec.torque * torque_scale,
            frequency=spec.frequency * f_scale,
            hardstop_angle=spec.hardstop_angle,
            hardstop_stiffness=spec.hardstop_stiffness * torque_scale,
            hardstop_damping=spec.hardstop_damping * torque_scale * time_scale,
        )
    raise TypeError(f"unknown controller spec {type(spec).__name__}")


# Calibrated 1x controller defaults for the stock designs.  The hardware
# papers publish drive frequencies but no gains or torque limits; these
# values came out of bring-up (see notes in the repository README) and are
# all overridable from config files.
_DEFAULTS = {
    "mugatu": SinusoidalPosition(
        amplitude=0.35,
        frequency=1.9,
        kp=15.0,
        kd=0.25,
        torque_limit=0.30,
    ),
    "zippy_ellipsoidal": BangBang(
        torque=3.0e-3,
        frequency=4.6,
        hardstop_angle=0.35,
        hardstop_stiffness=0.081,
        hardstop_damping=4.6e-4,
    ),
    "zippy_spherical": BangBang(
        torque=1.05e-3,
        frequency=4.6,
        hardstop_angle=0.35,
        hardstop_stiffness=0.080,
        hardstop_damping=4.45e-4,
    ),
}


def default_controller(design_name: str) -> ControllerSpec:
    try:
        return _DEFAULTS[design_name]
    except KeyError:
        raise ValueError(f"no default controller for design {design_name!r}") from None
