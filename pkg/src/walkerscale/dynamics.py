"""Floating-base dynamics of the two-body walker and its integrator.

The walker has 7 degrees of freedom: the left leg is the floating base
(position + orientation, with the frame origin at the hip joint) and the
right leg swings about the shared lateral hip axis.  forward_dynamics and
step are thin dataclass wrappers around the compiled kernels in _engine;
run_trial (see simulate) drives the same kernels in a fused loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import _engine
from .contact import ContactForce, ContactParams
from .control import BangBang, ControllerSpec, SinusoidalPosition
from .model import RigidBodySpec, WalkerDesign, build_bodies, hip_frame_feet

Bodies = tuple[RigidBodySpec, RigidBodySpec]

LEFT = 0
RIGHT = 1

# how many integrator steps one stride period is divided into, and the
# safety factors on the stiff-contact and friction-regularization limits
STEPS_PER_STRIDE = 5000
CONTACT_RESOLUTION = 2.0 * math.pi / 20.0
FRICTION_SAFETY = 0.5


class SimulationDiverged(RuntimeError):
    """Integration produced a non-finite state; carries the last valid one."""

    def __init__(self, message: str, last_state: "WalkerState"):
        super().__init__(message)
        self.last_state = last_state


@dataclass(frozen=True)
class WalkerState:
    """Full dynamic state.  base_* refer to the left leg; angular velocity is
    expressed in the base body frame, matching what gets logged."""

    base_position: np.ndarray
    base_orientation: np.ndarray  # unit quaternion, w-x-y-z
    base_linear_velocity: np.ndarray
    base_angular_velocity: np.ndarray  # body frame
    hip_angle: float
    hip_rate: float
    time: float = 0.0

    def __post_init__(self):
        for name in ("base_position", "base_linear_velocity", "base_angular_velocity"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(3))
        q = np.asarray(self.base_orientation, dtype=float).reshape(4)
        object.__setattr__(self, "base_orientation", q)
        if abs(float(q @ q) - 1.0) > 2e-9:
            raise ValueError("base orientation quaternion must be unit length")
        values = np.concatenate(
            [self.base_position, q, self.base_linear_velocity, self.base_angular_velocity,
             [self.hip_angle, self.hip_rate, self.time]]
        )
        if not np.all(np.isfinite(values)):
            raise ValueError("walker state contains non-finite entries")


@dataclass(frozen=True)
class Wrench:
    """External force/torque on one body, in world coordinates.

    frame is either "world_at_com" or ("world_at_point", p) with p a world
    position where the force acts.
    """

    force: np.ndarray
    torque: np.ndarray = field(default_factory=lambda: np.zeros(3))
    frame: object = "world_at_com"

    def __post_init__(self):
        object.__setattr__(self, "force", np.asarray(self.force, dtype=float).reshape(3))
        object.__setattr__(self, "torque", np.asarray(self.torque, dtype=float).reshape(3))


def quat_to_rot(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def rot_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def pack_state(state: WalkerState) -> np.ndarray:
    """State dataclass -> the 15-float kernel vector (world angular velocity)."""
    x = np.empty(15)
    x[0:3] = state.base_position
    x[3:7] = state.base_orientation
    x[7:10] = state.base_linear_velocity
    R = quat_to_rot(state.base_orientation)
    x[10:13] = R @ state.base_angular_velocity
    x[13] = state.hip_angle
    x[14] = state.hip_rate
    return x


def unpack_state(x: np.ndarray, t: float) -> WalkerState:
    R = quat_to_rot(x[3:7])
    return WalkerState(
        base_position=x[0:3].copy(),
        base_orientation=x[3:7].copy(),
        base_linear_velocity=x[7:10].copy(),
        base_angular_velocity=R.T @ x[10:13],
        hip_angle=float(x[13]),
        hip_rate=float(x[14]),
        time=t,
    )


def pack_bodies(bodies: Bodies):
    left, right = bodies
    return (
        float(left.mass),
        float(right.mass),
        np.ascontiguousarray(left.com),
        np.ascontiguousarray(right.com),
        np.ascontiguousarray(left.inertia),
        np.ascontiguousarray(right.inertia),
    )


def pack_controller(spec: ControllerSpec) -> tuple[int, np.ndarray]:
    if isinstance(spec, SinusoidalPosition):
        return _engine.CTRL_SINUSOID, np.array(
            [spec.amplitude, spec.frequency, spec.kp, spec.kd, spec.torque_limit, 0.0]
        )
    if isinstance(spec, BangBang):
        return _engine.CTRL_BANGBANG, np.array(
            [spec.torque, spec.frequency, spec.hardstop_angle, spec.hardstop_stiffness, spec.hardstop_damping, 0.0]
        )
    raise TypeError(f"unknown controller spec {type(spec).__name__}")


def _generalized_external(
    state_x: np.ndarray,
    bodies: Bodies,
    contact_forces: Iterable[tuple[int, ContactForce]] = (),
    wrenches: Iterable[tuple[int, Wrench]] = (),
) -> np.ndarray:
    """Project point forces and wrenches into the 7 generalized coordinates."""
    R_l = quat_to_rot(state_x[3:7])
    R_r = R_l @ rot_y(state_x[13])
    a_w = R_l[:, 1]
    p = state_x[0:3]
    q = np.zeros(7)

    def add_point_force(body_id: int, point: np.ndarray, force: np.ndarray):
        r = point - p
        moment = np.cross(r, force)
        q[0:3] += force
        q[3:6] += moment
        if body_id == RIGHT:
            q[6] += a_w @ moment

    def add_torque(body_id: int, torque: np.ndarray):
        q[3:6] += torque
        if body_id == RIGHT:
            q[6] += a_w @ torque

    for body_id, cf in contact_forces:
        total = cf.friction_force + np.array([0.0, 0.0, cf.normal_force])
        add_point_force(body_id, cf.point, total)
    for body_id, wr in wrenches:
        if wr.frame == "world_at_com":
            com_w = p + (R_l if body_id == LEFT else R_r) @ bodies[body_id].com
            add_point_force(body_id, com_w, wr.force)
        else:
            tag, point = wr.frame
            if tag != "world_at_point":
                raise ValueError(f"unknown wrench frame {wr.frame!r}")
            add_point_force(body_id, np.asarray(point, dtype=float), wr.force)
        add_torque(body_id, wr.torque)
    return q


def forward_dynamics(
    bodies: Bodies,
    state: WalkerState,
    hip_torque: float,
    external: Sequence[tuple[int, Wrench]] = (),
    gravity: float = 9.81,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Accelerations (base linear, base angular in world frame, hip) of the
    7-DoF system under gravity, the hip torque, and any external wrenches."""
    x = pack_state(state)
    q_ext = _generalized_external(x, bodies, wrenches=external)
    ok, acc = _engine.forward_dyn(x, float(hip_torque), q_ext, *pack_bodies(bodies), float(gravity))
    if not ok:
        raise ValueError("mass matrix is not positive definite; corrupt body specs")
    return acc[0:3].copy(), acc[3:6].copy(), float(acc[6])


def step(
    bodies: Bodies,
    state: WalkerState,
    controller_torque: float,
    contact_forces: Sequence[tuple[int, ContactForce]],
    dt: float,
    gravity: float = 9.81,
) -> WalkerState:
    """Advance one semi-implicit Euler step under the given applied forces.

    Velocities update from the accelerations at the current state, positions
    from the new velocities, and the quaternion through the exponential map
    (then renormalized).  Contact forces are held fixed over the step, which
    matches how the fused trial loop treats them.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    x = pack_state(state)
    q_ext = _generalized_external(x, bodies, contact_forces=contact_forces)
    ok, out = _engine.single_step(
        x, state.time, float(controller_torque), q_ext, *pack_bodies(bodies), float(gravity), float(dt)
    )
    if not ok:
        raise ValueError("mass matrix is not positive definite; corrupt body specs")
    if not np.all(np.isfinite(out)):
        raise SimulationDiverged("integration produced a non-finite state", state)
    return unpack_state(out, state.time + dt)


def time_step_for(design: WalkerDesign, contact: ContactParams) -> float:
    """Fixed integration step for a design/contact pairing.

    Three limits, all of which shrink with sqrt(scale) so scaled runs stay
    dynamically similar: a fixed number of steps per stride, resolution of
    the contact-spring oscillation, and explicit-integration stability of
    the regularized friction force at stance loads.
    """
    left, right, _ = build_bodies(design)
    f = design.controller.frequency
    dt_stride = 1.0 / f / STEPS_PER_STRIDE
    m_min = min(left.mass, right.mass)
    dt_contact = CONTACT_RESOLUTION * math.sqrt(m_min / contact.stiffness)
    weight = design.total_mass * design.gravity
    dt_friction = FRICTION_SAFETY * m_min * contact.regularization_velocity / (
        contact.friction_mu * weight
    ) if contact.friction_mu > 0.0 else math.inf
    return min(dt_stride, dt_contact, dt_friction)


def standing_state(
    design: WalkerDesign,
    roll: float = 0.0,
    pitch: float = 0.0,
    yaw: float = 0.0,
) -> WalkerState:
    """Static standing pose with both feet exactly touching the ground.

    Attitude offsets (intrinsic Z-Y-X) tip the whole robot; the hip height is
    then solved so the lower of the two foot support points sits at z = 0.
    """
    from .contact import lowest_point  # deferred to avoid import cycle in docs builds

    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    Rz = np.array([[cy, -sy, 0], [sy, cy, 0], [0, 0, 1]])
    Ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]])
    Rx = np.array([[1, 0, 0], [0, cr, -sr], [0, sr, cr]])
    R = Rz @ Ry @ Rx
    foot_l, foot_r = hip_frame_feet(design)
    _, depth_l = lowest_point(foot_l, R, np.zeros(3))
    _, depth_r = lowest_point(foot_r, R, np.zeros(3))
    height = max(depth_l, depth_r)  # depth at zero translation = -z of support point
    quat = _rot_to_quat(R)
    return WalkerState(
        base_position=np.array([0.0, 0.0, height]),
        base_orientation=quat,
        base_linear_velocity=np.zeros(3),
        base_angular_velocity=np.zeros(3),
        hip_angle=0.0,
        hip_rate=0.0,
        time=0.0,
    )


def _rot_to_quat(R: np.ndarray) -> np.ndarray:
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    if tr > 0:
        s = math.sqrt(tr + 1.0) * 2
        w = 0.25 * s
        x = (R[2, 1] - R[1, 2]) / s
        y = (R[0, 2] - R[2, 0]) / s
        z = (R[1, 0] - R[0, 1]) / s
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2
        w = (R[2, 1] - R[1, 2]) / s
        x = 0.25 * s
        y = (R[0, 1] + R[1, 0]) / s
        z = (R[0, 2] + R[2, 0]) / s
    elif R[1, 1] > R[2, 2]:
        s = math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2
        w = (R[0, 2] - R[2, 0]) / s
        x = (R[0, 1] + R[1, 0]) / s
        y = 0.25 * s
        z = (R[1, 2] + R[2, 1]) / s
    else:
        s = math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2
        w = (R[1, 0] - R[0, 1]) / s
        x = (R[0, 2] + R[2, 0]) / s
        y = (R[1, 2] + R[2, 1]) / s
        z = 0.25 * s
    q = np.array([w, x, y, z])
    return q / np.linalg.norm(q)
