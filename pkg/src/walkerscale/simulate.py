"""Walking trials: integration, fall detection, limit-cycle classification.

A trial starts from a static standing pose (both feet touching, hip angle at
the controller's zero phase) with a small roll offset to break the left/right
symmetry, integrates for a fixed duration, and classifies the result as
stable, fell, no_limit_cycle, or diverged.  Stability means the stride-to-
stride Poincare map settled onto a fixed point within tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import _engine
from .contact import ContactParams, default_contact_params, patch_radius_coefficient
from .dynamics import (
    pack_bodies,
    pack_controller,
    standing_state,
    pack_state,
    time_step_for,
)
from .model import WalkerDesign, build_bodies, hip_frame_feet

FALL_ANGLE = math.radians(60.0)
FALL_HEIGHT_FRACTION = 0.4
CONVERGENCE_TOL = 0.05
CONVERGENCE_STRIDES = 5
SAMPLES_PER_STRIDE = 256

OUTCOME_STABLE = "stable"
OUTCOME_FELL = "fell"
OUTCOME_NO_LIMIT_CYCLE = "no_limit_cycle"
OUTCOME_DIVERGED = "diverged"

COLUMNS = (
    "t",
    "base_x", "base_y", "base_z",
    "quat_w", "quat_x", "quat_y", "quat_z",
    "vel_x", "vel_y", "vel_z",
    "omega_x", "omega_y", "omega_z",
    "hip_angle", "hip_rate",
    "tau_drive", "tau_hardstop",
    "fn_left", "ftx_left", "fty_left", "taux_left", "tauy_left", "tauz_left",
    "depth_left", "cpx_left", "cpy_left", "cpz_left",
    "fn_right", "ftx_right", "fty_right", "taux_right", "tauy_right", "tauz_right",
    "depth_right", "cpx_right", "cpy_right", "cpz_right",
    "roll", "pitch", "yaw",
    "roll_rate", "pitch_rate", "yaw_rate",
    "com_x", "com_y", "com_z",
    "kinetic_energy", "potential_energy", "spring_energy",
    "dissipated_energy", "actuator_work",
)
_COL_INDEX = {name: i for i, name in enumerate(COLUMNS)}

assert len(COLUMNS) == _engine.NCOLS


@dataclass(frozen=True)
class TrialConfig:
    design: WalkerDesign
    contact: Optional[ContactParams] = None
    duration: float = 25.0
    settle_time: float = 2.0
    initial_perturbation: float = 0.02  # rad of initial body roll
    log_decimation: Optional[int] = None  # integrator steps per logged sample
    seed: Optional[int] = None  # extra seeded attitude jitter; None = none

    def __post_init__(self):
        if self.duration <= 0.0:
            raise ValueError("duration must be positive")
        if not 0.0 <= self.settle_time < self.duration:
            raise ValueError("settle_time must lie in [0, duration)")
        if self.log_decimation is not None and self.log_decimation < 1:
            raise ValueError("log_decimation must be >= 1")

    def resolved_contact(self) -> ContactParams:
        return self.contact if self.contact is not None else default_contact_params(self.design)


@dataclass
class Trajectory:
    """Uniformly sampled trial log.  data is (n_samples, len(COLUMNS))."""

    data: np.ndarray
    leg_length: float
    gravity: float
    design_name: str = ""

    def __post_init__(self):
        self.data = np.atleast_2d(np.asarray(self.data, dtype=float))
        if self.data.shape[1] != len(COLUMNS):
            raise ValueError(f"expected {len(COLUMNS)} columns, got {self.data.shape[1]}")
        t = self.data[:, 0]
        if len(t) > 1:
            dts = np.diff(t)
            if np.any(dts <= 0.0):
                raise ValueError("sample times must be strictly increasing")
            if np.max(np.abs(dts - dts[0])) > 1e-9 * max(1.0, abs(t[-1])):
                raise ValueError("sample interval must be constant")

    def __len__(self) -> int:
        return self.data.shape[0]

    def col(self, name: str) -> np.ndarray:
        return self.data[:, _COL_INDEX[name]]

    @property
    def t(self) -> np.ndarray:
        return self.data[:, 0]

    @property
    def sample_dt(self) -> float:
        if len(self) < 2:
            return 0.0
        return float(self.data[1, 0] - self.data[0, 0])

    @property
    def hip_angle(self) -> np.ndarray:
        return self.col("hip_angle")

    @property
    def hip_torque(self) -> np.ndarray:
        """Total applied hip torque (drive plus hardstop)."""
        return self.col("tau_drive") + self.col("tau_hardstop")

    @property
    def attitude(self) -> np.ndarray:
        """(n, 3) roll/pitch/yaw in radians."""
        return self.data[:, _COL_INDEX["roll"]:_COL_INDEX["yaw"] + 1]

    @property
    def com(self) -> np.ndarray:
        return self.data[:, _COL_INDEX["com_x"]:_COL_INDEX["com_z"] + 1]

    def window(self, t_start: float = -math.inf, t_end: float = math.inf) -> "Trajectory":
        mask = (self.t >= t_start) & (self.t <= t_end)
        return replace(self, data=self.data[mask])

    def mechanical_energy(self) -> np.ndarray:
        return self.col("kinetic_energy") + self.col("potential_energy") + self.col("spring_energy")

    def energy_residual(self) -> np.ndarray:
        """Audit signal KE+PE+E_spring+D-W relative to the first sample.

        Stays near zero for a correct integration; the tests bound it by a
        fraction of the peak kinetic energy.
        """
        e = self.mechanical_energy() + self.col("dissipated_energy") - self.col("actuator_work")
        return e - e[0]

    def to_csv(self, path) -> None:
        header = ",".join(COLUMNS)
        meta = (
            f"# leg_length={self.leg_length!r} gravity={self.gravity!r}"
            f" design={self.design_name}"
        )
        with open(path, "w") as fh:
            fh.write(meta + "\n")
            fh.write(header + "\n")
            np.savetxt(fh, self.data, delimiter=",", fmt="%.17g")

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        leg_length = math.nan
        gravity = math.nan
        name = ""
        with open(path) as fh:
            first = fh.readline().strip()
            if first.startswith("#"):
                for tok in first[1:].split():
                    if tok.startswith("leg_length="):
                        leg_length = float(tok.split("=", 1)[1])
                    elif tok.startswith("gravity="):
                        gravity = float(tok.split("=", 1)[1])
                    elif tok.startswith("design="):
                        name = tok.split("=", 1)[1]
                fh.readline()  # column header
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        return cls(data=data, leg_length=leg_length, gravity=gravity, design_name=name)


@dataclass(frozen=True)
class TrialVerdict:
    outcome: str
    convergence_time: Optional[float] = None
    strides_analyzed: int = 0

    def __post_init__(self):
        if self.outcome not in (OUTCOME_STABLE, OUTCOME_FELL, OUTCOME_NO_LIMIT_CYCLE, OUTCOME_DIVERGED):
            raise ValueError(f"unknown outcome {self.outcome!r}")
        if self.outcome == OUTCOME_STABLE and self.convergence_time is None:
            raise ValueError("stable verdicts carry a convergence time")

    @property
    def stable(self) -> bool:
        return self.outcome == OUTCOME_STABLE


def _default_decimation(design: WalkerDesign, dt: float) -> int:
    steps_per_stride = 1.0 / (design.controller.frequency * dt)
    return max(1, int(round(steps_per_stride / SAMPLES_PER_STRIDE)))


def run_trial(config: TrialConfig) -> tuple[Trajectory, TrialVerdict]:
    """Integrate one walking trial and classify it.

    Numerical divergence is reported as a verdict with the partial log, not
    raised.  Reruns of the same config produce bit-identical trajectories.
    """
    design = config.design
    contact = config.resolved_contact()
    dt = time_step_for(design, contact)
    decim = config.log_decimation or _default_decimation(design, dt)
    n_steps = int(math.ceil(config.duration / dt / decim)) * decim

    roll = config.initial_perturbation
    pitch = 0.0
    if config.seed is not None:
        rng = np.random.default_rng(config.seed)
        jitter = rng.normal(scale=abs(config.initial_perturbation) * 0.25, size=2)
        roll += jitter[0]
        pitch += jitter[1]
    state0 = standing_state(design, roll=roll, pitch=pitch)

    left, right, _ = build_bodies(design)
    foot_l, foot_r = hip_frame_feet(design)
    ctrl_kind, ctrl_p = pack_controller(design.controller)
    log = np.zeros((n_steps // decim + 1, _engine.NCOLS))
    status, rows, _, _ = _engine.simulate_loop(
        pack_state(state0),
        0.0,
        n_steps,
        decim,
        *pack_bodies((left, right)),
        np.ascontiguousarray(foot_l.center),
        np.ascontiguousarray(foot_l.semi_axes),
        np.ascontiguousarray(foot_r.center),
        np.ascontiguousarray(foot_r.semi_axes),
        contact.stiffness,
        contact.dissipation,
        contact.friction_mu,
        contact.regularization_velocity,
        patch_radius_coefficient(foot_l),
        patch_radius_coefficient(foot_r),
        ctrl_kind,
        ctrl_p,
        design.gravity,
        dt,
        FALL_ANGLE,
        FALL_HEIGHT_FRACTION * design.leg_length,
        log,
    )
    traj = Trajectory(
        data=log[:rows],
        leg_length=design.leg_length,
        gravity=design.gravity,
        design_name=design.name,
    )

    if status == _engine.STATUS_DIVERGED:
        return traj, TrialVerdict(OUTCOME_DIVERGED)
    analysis = traj.window(t_start=config.settle_time)
    crossings = stride_crossings(analysis)
    if status == _engine.STATUS_FELL:
        return traj, TrialVerdict(OUTCOME_FELL, strides_analyzed=max(0, len(crossings) - 1))
    converged, t_conv = detect_limit_cycle(analysis)
    if not converged:
        return traj, TrialVerdict(OUTCOME_NO_LIMIT_CYCLE, strides_analyzed=max(0, len(crossings) - 1))
    strides = int(np.sum(crossings >= t_conv)) - 1
    return traj, TrialVerdict(OUTCOME_STABLE, convergence_time=t_conv, strides_analyzed=max(0, strides))


def stride_crossings(traj: Trajectory) -> np.ndarray:
    """Times of upward zero crossings of the hip angle about its mean.

    Crossing times are linearly interpolated between samples; consecutive
    crossings bound one stride.
    """
    t = traj.t
    if len(t) < 2:
        return np.empty(0)
    q = traj.hip_angle - float(np.mean(traj.hip_angle))
    if float(np.ptp(q)) < 1e-9:
        # a hip that never moves has no strides; without this floor,
        # integrator noise around the mean would register as crossings
        return np.empty(0)
    up = (q[:-1] < 0.0) & (q[1:] >= 0.0)
    idx = np.nonzero(up)[0]
    if len(idx) == 0:
        return np.empty(0)
    frac = -q[idx] / (q[idx + 1] - q[idx])
    return t[idx] + frac * (t[idx + 1] - t[idx])


def _section_points(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Poincare section samples at stride boundaries.

    Each row is the normalized state (pitch, pitch_rate * sqrt(L/g), roll,
    hip angle), interpolated at the crossing times.  All entries are in
    radians, so the section is dimensionless against a 1 rad scale.
    """
    crossings = stride_crossings(traj)
    if len(crossings) == 0:
        return crossings, np.empty((0, 4))
    t = traj.t
    tau = math.sqrt(traj.leg_length / traj.gravity)
    signals = (
        traj.col("pitch"),
        traj.col("pitch_rate") * tau,
        traj.col("roll"),
        traj.hip_angle,
    )
    section = np.column_stack([np.interp(crossings, t, s) for s in signals])
    return crossings, section


def detect_limit_cycle(
    traj: Trajectory,
    tol: float = CONVERGENCE_TOL,
    k: int = CONVERGENCE_STRIDES,
) -> tuple[bool, Optional[float]]:
    """Stride-map convergence test.

    Converged when k consecutive Poincare points each differ from their
    predecessor by less than tol in the max norm; the convergence time is the
    first point of that run.  Needs at least k+1 complete strides.
    """
    if tol <= 0.0 or k < 1:
        raise ValueError("tol must be positive and k at least 1")
    crossings, section = _section_points(traj)
    if len(crossings) < k + 1:
        return False, None
    diffs = np.max(np.abs(np.diff(section, axis=0)), axis=1)
    small = diffs < tol
    run = 0
    for j, ok in enumerate(small):
        run = run + 1 if ok else 0
        if run == k:
            return True, float(crossings[j - k + 1])
    return False, None


def attitude_amplitudes(
    traj: Trajectory,
    t_start: float = -math.inf,
    min_strides: int = 5,
) -> dict[str, tuple[float, float]]:
    """Per-stride peak-to-peak roll/pitch/yaw amplitudes, in degrees.

    For each complete stride the amplitude is max - min of the signal; the
    returned (mean, stddev) aggregate across strides.  Yaw is unwrapped
    before slicing so turning gaits do not alias.
    """
    window = traj.window(t_start=t_start)
    crossings = stride_crossings(window)
    n_strides = len(crossings) - 1
    if n_strides < min_strides:
        raise ValueError(f"need at least {min_strides} complete strides, have {max(n_strides, 0)}")
    t = window.t
    signals = {
        "roll": window.col("roll").copy(),
        "pitch": window.col("pitch").copy(),
        "yaw": np.unwrap(window.col("yaw")),
    }
    out: dict[str, tuple[float, float]] = {}
    for name, sig in signals.items():
        amps = np.empty(n_strides)
        for i in range(n_strides):
            lo, hi = crossings[i], crossings[i + 1]
            mask = (t >= lo) & (t <= hi)
            seg = sig[mask]
            # include the interpolated endpoints so short strides still have
            # a well-defined extent
            ends = np.interp([lo, hi], t, sig)
            amps[i] = max(seg.max() if len(seg) else -math.inf, ends.max()) - min(
                seg.min() if len(seg) else math.inf, ends.min()
            )
        out[name] = (math.degrees(float(np.mean(amps))), math.degrees(float(np.std(amps, ddof=1))))
    return out
