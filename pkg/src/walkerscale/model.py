"""Walker designs, scaling rules, and rigid-body construction.

A walker is two legs joined by a single revolute hip whose axis points
sideways (the pitch axis), so the legs swing fore-aft.  Each leg carries a
curved foot, the lower half of an ellipsoid, which is the only geometry that
ever touches the ground.

Frames and conventions used throughout the package:

* world: z up, gravity -z, ground plane z = 0, x is the nominal forward
  direction at the start of a trial.
* leg frame: origin at the hip joint, axes parallel to the world frame when
  the robot stands upright with both legs together.  The foot bottom of a
  standing robot is therefore at z = -leg_length.
* left leg is the +y side.

The mass layout of the real robots comes from CAD and is not published, so
``build_bodies`` composes each leg from three primitives (a box for the leg
and body structure, a half-ellipsoid shell for the foot, a point mass at the
hip for actuator hardware) constrained to hit a configurable total mass and
centre-of-mass location.  The defaults were calibrated until the stock
designs walk; every number is overridable through the config file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .control import ControllerSpec, scale_controller

GRAVITY_DEFAULT = 9.81

# Quadrature resolution for the foot-shell surface integrals.  Trapezoid in
# the periodic direction and Gauss-Legendre across latitude converge far
# below the 1e-12 relative tolerances the tests use.
_SHELL_NODES_THETA = 64
_SHELL_NODES_PHI = 128


class DesignError(ValueError):
    """A walker design violates one of its invariants."""


@dataclass(frozen=True)
class FootGeometry:
    """Ellipsoidal foot rigidly attached to a leg.

    semi_axis_x/y/z are the ellipsoid semi-axes in the leg frame;
    center_offset is the ellipsoid centre in the leg frame (metres).
    """

    semi_axis_x: float
    semi_axis_y: float
    semi_axis_z: float
    center_offset: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if min(self.semi_axis_x, self.semi_axis_y, self.semi_axis_z) <= 0.0:
            raise DesignError("foot semi-axes must all be positive")

    @property
    def semi_axes(self) -> np.ndarray:
        return np.array([self.semi_axis_x, self.semi_axis_y, self.semi_axis_z])

    @property
    def center(self) -> np.ndarray:
        return np.asarray(self.center_offset, dtype=float)

    def is_spherical(self, rel_tol: float = 1e-12) -> bool:
        axes = self.semi_axes
        return float(axes.max() - axes.min()) <= rel_tol * float(axes.max())


@dataclass(frozen=True)
class RigidBodySpec:
    """Mass properties of one leg: mass, CoM (leg frame), inertia about CoM."""

    mass: float
    com: np.ndarray
    inertia: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "com", np.asarray(self.com, dtype=float).reshape(3))
        object.__setattr__(self, "inertia", np.asarray(self.inertia, dtype=float).reshape(3, 3))
        validate_inertia(self.mass, self.inertia)


def validate_inertia(mass: float, inertia: np.ndarray) -> None:
    """Check symmetry, positive definiteness, and the triangle inequality."""
    if mass <= 0.0:
        raise DesignError("body mass must be positive")
    if not np.allclose(inertia, inertia.T, rtol=0.0, atol=1e-12 * max(1.0, abs(inertia).max())):
        raise DesignError("inertia tensor must be symmetric")
    eigs = np.linalg.eigvalsh(0.5 * (inertia + inertia.T))
    if eigs.min() <= 0.0:
        raise DesignError("inertia tensor must be positive definite")
    # principal moments of any real mass distribution satisfy Ia + Ib >= Ic
    a, b, c = np.sort(eigs)
    if a + b < c * (1.0 - 1e-9):
        raise DesignError("inertia tensor violates the triangle inequality")


@dataclass(frozen=True)
class ScalingLaw:
    """How mass and drive frequency follow leg length.

    Lengths always scale linearly (exponent fixed at 1).  mass_exponent is 2
    or 3 for the two standard laws but any real value is accepted so survey
    exponents can be explored.
    """

    mass_exponent: float = 3.0
    frequency_exponent: float = -0.5
    length_exponent: float = field(default=1.0)

    def __post_init__(self):
        if self.length_exponent != 1.0:
            raise DesignError("length exponent is fixed at 1")


@dataclass(frozen=True)
class WalkerDesign:
    """Complete description of one walker at one size."""

    name: str
    leg_length: float
    body_length: float
    total_mass: float
    foot_left: FootGeometry
    foot_right: FootGeometry
    controller: ControllerSpec
    leg_mass_fraction: float = 0.5
    leg_com_height_fraction: float = 0.65
    leg_com_lateral_offset: float = 0.0
    hip_offset: tuple[float, float, float] = (0.0, 0.0, 0.0)
    gravity: float = GRAVITY_DEFAULT
    # inertia-composition knobs (see build_bodies)
    shaft_width_fraction: float = 0.2
    foot_shell_mass_fraction: float = 0.3

    def __post_init__(self):
        if self.leg_length <= 0.0:
            raise DesignError("leg_length must be positive")
        if self.total_mass <= 0.0:
            raise DesignError("total_mass must be positive")
        if not 0.0 < self.leg_mass_fraction <= 0.5:
            raise DesignError("leg_mass_fraction must lie in (0, 0.5]")
        if self.body_length < self.leg_length:
            raise DesignError("body_length must be at least leg_length")
        if self.gravity <= 0.0:
            raise DesignError("gravity must be positive")


def _mirror_foot(foot: FootGeometry) -> FootGeometry:
    cx, cy, cz = foot.center_offset
    return replace(foot, center_offset=(cx, -cy, cz))


def symmetric_feet(semi_axes, center_left) -> tuple[FootGeometry, FootGeometry]:
    """Build a mirrored foot pair from the left foot's description."""
    ax, ay, az = (float(v) for v in semi_axes)
    left = FootGeometry(ax, ay, az, tuple(float(v) for v in center_left))
    return left, _mirror_foot(left)


# ---------------------------------------------------------------------------
# stock designs
#
# Lengths and masses for the three variants are the published hardware values.
# Mass-layout fractions, foot lateral placement, and controller gains are
# bring-up calibrations (see module docstring) and live here so the bundled
# configs and builtin_design agree.

_BUILTIN_BASE = {
    "mugatu": dict(
        leg_length=0.153,
        body_length=0.186,
        total_mass=0.900,
        semi_axes=(0.120, 0.120, 0.120),
        foot_lateral=0.010,
        leg_mass_fraction=0.50,
        leg_com_height_fraction=0.44,
        leg_com_lateral_offset=0.003,
        shaft_width_fraction=0.40,
        foot_shell_mass_fraction=0.25,
    ),
    "zippy_ellipsoidal": dict(
        leg_length=0.0247,
        body_length=0.0364,
        total_mass=0.025,
        semi_axes=(0.025, 0.030, 0.025),
        foot_lateral=0.0020,
        leg_mass_fraction=0.50,
        leg_com_height_fraction=0.75,
        leg_com_lateral_offset=0.0005,
        shaft_width_fraction=0.40,
        foot_shell_mass_fraction=0.25,
    ),
    "zippy_spherical": dict(
        leg_length=0.0243,
        body_length=0.0364,
        total_mass=0.025,
        semi_axes=(0.0191, 0.0191, 0.0191),
        foot_lateral=0.0016,
        leg_mass_fraction=0.50,
        leg_com_height_fraction=0.44,
        leg_com_lateral_offset=0.0005,
        shaft_width_fraction=0.40,
        foot_shell_mass_fraction=0.25,
    ),
}

BUILTIN_NAMES = tuple(_BUILTIN_BASE)


def builtin_design(name: str) -> WalkerDesign:
    """Return one of the three stock walker designs by name."""
    from .control import default_controller  # local import avoids a cycle at module load

    if name not in _BUILTIN_BASE:
        raise DesignError(f"unknown builtin design {name!r}; choose from {BUILTIN_NAMES}")
    p = _BUILTIN_BASE[name]
    az = p["semi_axes"][2]
    # foot centre sits so the lowest point of a standing foot is exactly at
    # ground level: centre z = semi_axis_z - leg_length in the hip frame.
    center_left = (0.0, p["foot_lateral"], az - p["leg_length"])
    foot_left, foot_right = symmetric_feet(p["semi_axes"], center_left)
    return WalkerDesign(
        name=name,
        leg_length=p["leg_length"],
        body_length=p["body_length"],
        total_mass=p["total_mass"],
        foot_left=foot_left,
        foot_right=foot_right,
        controller=default_controller(name),
        leg_mass_fraction=p["leg_mass_fraction"],
        leg_com_height_fraction=p["leg_com_height_fraction"],
        leg_com_lateral_offset=p["leg_com_lateral_offset"],
        shaft_width_fraction=p.get("shaft_width_fraction", 0.2),
        foot_shell_mass_fraction=p.get("foot_shell_mass_fraction", 0.3),
    )


def scale_design(base: WalkerDesign, target_leg_length: float, law: ScalingLaw) -> WalkerDesign:
    """Geometrically rescale a design to a new leg length.

    Every length is multiplied by s = target / base.leg_length, the total
    mass by s**mass_exponent, and the controller frequency by
    s**frequency_exponent.  Angles, mass fractions, and CoM fractions are
    dimensionless and stay put.  Controller torque gains are NOT touched
    here; the experiment layer supplies the torque scale separately (see
    control.scale_controller).
    """
    if target_leg_length <= 0.0:
        raise DesignError("target leg length must be positive")
    if not 0.005 <= target_leg_length <= 5.0:
        raise DesignError("target leg length outside the supported 0.005-5.0 m range")
    s = target_leg_length / base.leg_length

    def scaled_foot(foot: FootGeometry) -> FootGeometry:
        return FootGeometry(
            foot.semi_axis_x * s,
            foot.semi_axis_y * s,
            foot.semi_axis_z * s,
            tuple(c * s for c in foot.center_offset),
        )

    return replace(
        base,
        leg_length=base.leg_length * s,
        body_length=base.body_length * s,
        total_mass=base.total_mass * s**law.mass_exponent,
        foot_left=scaled_foot(base.foot_left),
        foot_right=scaled_foot(base.foot_right),
        leg_com_lateral_offset=base.leg_com_lateral_offset * s,
        hip_offset=tuple(c * s for c in base.hip_offset),
        controller=scale_controller(base.controller, s, law, torque_scale=1.0),
    )


# ---------------------------------------------------------------------------
# inertia composition


def _box_inertia(mass: float, dims: np.ndarray) -> np.ndarray:
    dx, dy, dz = dims
    return mass / 12.0 * np.diag([dy * dy + dz * dz, dx * dx + dz * dz, dx * dx + dy * dy])


def half_ellipsoid_shell(semi_axes) -> tuple[np.ndarray, np.ndarray]:
    """Unit-mass surface properties of a lower half-ellipsoid shell.

    Returns (com, inertia about the ellipsoid centre) for a thin uniform
    shell covering the z < 0 half of the ellipsoid, computed by quadrature:
    trapezoid in the periodic angle (spectrally accurate) and Gauss-Legendre
    in latitude.
    """
    a, b, c = (float(v) for v in semi_axes)
    # theta measured from the downward pole, in (0, pi/2)
    nodes, weights = np.polynomial.legendre.leggauss(_SHELL_NODES_THETA)
    theta = 0.25 * math.pi * (nodes + 1.0)
    w_theta = 0.25 * math.pi * weights
    phi = np.arange(_SHELL_NODES_PHI) * (2.0 * math.pi / _SHELL_NODES_PHI)
    w_phi = 2.0 * math.pi / _SHELL_NODES_PHI

    th = theta[:, None]
    ph = phi[None, :]
    st, ct = np.sin(th), np.cos(th)
    sp, cp = np.sin(ph), np.cos(ph)

    x = a * st * cp
    y = b * st * sp
    z = -c * ct * np.ones_like(ph)
    # surface element |r_theta x r_phi|
    r_th = np.stack([a * ct * cp, b * ct * sp, c * st * np.ones_like(ph)], axis=0)
    r_ph = np.stack([-a * st * sp, b * st * cp, np.zeros_like(st * sp)], axis=0)
    cross = np.cross(r_th, r_ph, axis=0)
    dA = np.sqrt((cross**2).sum(axis=0)) * w_theta[:, None] * w_phi

    area = dA.sum()
    com = np.array([(x * dA).sum(), (y * dA).sum(), (z * dA).sum()]) / area

    def moment(u, v):
        return (u * v * dA).sum() / area

    ixx = moment(y, y) + moment(z, z)
    iyy = moment(x, x) + moment(z, z)
    izz = moment(x, x) + moment(y, y)
    ixy = -moment(x, y)
    ixz = -moment(x, z)
    iyz = -moment(y, z)
    inertia = np.array([[ixx, ixy, ixz], [ixy, iyy, iyz], [ixz, iyz, izz]])
    return com, inertia


def _shift_inertia(mass: float, inertia_at_com: np.ndarray, offset: np.ndarray) -> np.ndarray:
    """Parallel-axis transport of an inertia tensor away from the CoM."""
    d = np.asarray(offset, dtype=float)
    return inertia_at_com + mass * ((d @ d) * np.eye(3) - np.outer(d, d))


def _compose_leg(design: WalkerDesign, foot: FootGeometry, lateral_sign: float) -> RigidBodySpec:
    m_total = design.total_mass
    m_struct = design.leg_mass_fraction * m_total
    m_hw = (1.0 - 2.0 * design.leg_mass_fraction) * m_total / 2.0
    m_leg = m_struct + m_hw  # always total/2 for the symmetric split
    m_shell = design.foot_shell_mass_fraction * m_struct
    m_box = m_struct - m_shell
    if m_box <= 0.0:
        raise DesignError("foot_shell_mass_fraction leaves no mass for the leg structure")

    hip = np.asarray(design.hip_offset, dtype=float)
    # CoM height is specified above the foot bottom; express it in the
    # hip-origin frame the dynamics uses
    foot_bottom_z = (foot.center[2] - hip[2]) - foot.semi_axis_z
    target = np.array(
        [
            0.0,
            lateral_sign * design.leg_com_lateral_offset,
            foot_bottom_z + design.leg_com_height_fraction * design.leg_length,
        ]
    )

    shell_com_local, shell_inertia_unit = half_ellipsoid_shell(foot.semi_axes)
    p_shell = (foot.center - hip) + shell_com_local
    shell_inertia = m_shell * (
        shell_inertia_unit - ((shell_com_local @ shell_com_local) * np.eye(3) - np.outer(shell_com_local, shell_com_local))
    )  # about the shell's own CoM

    p_hw = np.zeros(3)  # actuator hardware lumped at the hip joint

    # the box centre is solved from the CoM constraint, so the target CoM is
    # met exactly for any mass split
    p_box = (m_leg * target - m_shell * p_shell - m_hw * p_hw) / m_box
    box_dims = np.array(
        [
            design.shaft_width_fraction * design.leg_length,
            design.shaft_width_fraction * design.leg_length,
            0.9 * design.body_length,
        ]
    )
    box_inertia = _box_inertia(m_box, box_dims)

    inertia = (
        _shift_inertia(m_shell, shell_inertia, p_shell - target)
        + _shift_inertia(m_box, box_inertia, p_box - target)
        + _shift_inertia(m_hw, np.zeros((3, 3)), p_hw - target)
    )
    return RigidBodySpec(mass=m_leg, com=target, inertia=inertia)


def hip_frame_feet(design: WalkerDesign) -> tuple[FootGeometry, FootGeometry]:
    """The two feet re-expressed in the hip-origin frame the dynamics uses."""
    hip = np.asarray(design.hip_offset, dtype=float)

    def shift(foot: FootGeometry) -> FootGeometry:
        return replace(foot, center_offset=tuple(foot.center - hip))

    return shift(design.foot_left), shift(design.foot_right)


def build_bodies(design: WalkerDesign) -> tuple[RigidBodySpec, RigidBodySpec, np.ndarray]:
    """Compose the two leg bodies and return them with the hip axis.

    The returned specs live in their leg frames (origin at the hip joint).
    The hip axis is the lateral +y axis, shared by both frames at zero hip
    angle.  Total mass is conserved exactly.
    """
    left = _compose_leg(design, design.foot_left, +1.0)
    right = _compose_leg(design, design.foot_right, -1.0)
    hip_axis = np.array([0.0, 1.0, 0.0])
    total = left.mass + right.mass
    if abs(total - design.total_mass) > 1e-9 * design.total_mass:
        raise DesignError("mass composition failed to conserve total mass")
    return left, right, hip_axis
