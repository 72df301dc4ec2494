"""Ellipsoid-on-plane contact: support-point query and compliant forces.

The ground is the half-space z <= 0.  Each foot contributes at most one
contact, the analytically deepest point of its ellipsoid, found with the
support map of the ellipsoid in the -z direction.  Normal force follows the
Hunt-Crossley law k*x*(1 + d*xdot) clamped at zero, and friction is smoothed
Coulomb: -mu*N*tanh(|v_t|/v_reg) along the slip direction, so the whole
force law is continuous and the integrator can stay explicit.

Because the feet really touch over a finite elastic patch (radius about
sqrt(R_eff * depth)), the contact also carries a moment: drilling friction
about the normal and rolling-resistance damping about the tangential axes.
Both vanish with the patch and preserve dynamic similarity (torque ~ m L).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import FootGeometry, WalkerDesign


@dataclass(frozen=True)
class ContactParams:
    stiffness: float  # N/m
    dissipation: float  # s/m, Hunt-Crossley velocity coefficient
    friction_mu: float = 0.8
    regularization_velocity: float = 1.0e-3  # m/s
    max_penetration_fraction: float = 1.0e-3  # target static penetration / L

    def __post_init__(self):
        if self.stiffness <= 0.0:
            raise ValueError("contact stiffness must be positive")
        if self.dissipation < 0.0:
            raise ValueError("contact dissipation must be non-negative")
        if self.friction_mu < 0.0:
            raise ValueError("friction coefficient must be non-negative")
        if self.regularization_velocity <= 0.0:
            raise ValueError("regularization velocity must be positive")
        if not 0.0 < self.max_penetration_fraction < 0.05:
            raise ValueError("max_penetration_fraction must lie in (0, 0.05)")


@dataclass(frozen=True)
class ContactForce:
    point: np.ndarray  # world, m
    normal_force: float  # N, along +z
    friction_force: np.ndarray  # world, N, tangent to the ground
    penetration: float  # m

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float).reshape(3))
        object.__setattr__(self, "friction_force", np.asarray(self.friction_force, dtype=float).reshape(3))


# Reference scale for the stock contact defaults: dissipation and the
# friction regularization velocity are quoted at the Mugatu leg length and
# carried to other sizes by the same square-root-of-scale rule that
# scale_contact_params applies.
REFERENCE_LEG_LENGTH = 0.153
DISSIPATION_AT_REFERENCE = 50.0  # s/m
V_REG_AT_REFERENCE = 1.0e-3  # m/s


def default_contact_params(design: WalkerDesign, eps: float = 1.0e-3, mu: float = 0.8) -> ContactParams:
    """Contact parameters for a design using the stock tuning.

    Stiffness targets a static penetration of eps * leg_length under the
    robot's full weight; dissipation and v_reg follow the dynamic-similarity
    square-root rule anchored at the reference (Mugatu) scale.
    """
    L = design.leg_length
    k = design.total_mass * design.gravity / (eps * L)
    root_s = math.sqrt(L / REFERENCE_LEG_LENGTH)
    return ContactParams(
        stiffness=k,
        dissipation=DISSIPATION_AT_REFERENCE / root_s,
        friction_mu=mu,
        regularization_velocity=V_REG_AT_REFERENCE * root_s,
        max_penetration_fraction=eps,
    )


def _check_rotation(rotation: np.ndarray) -> np.ndarray:
    R = np.asarray(rotation, dtype=float).reshape(3, 3)
    if not np.allclose(R @ R.T, np.eye(3), atol=1e-9) or not math.isclose(
        float(np.linalg.det(R)), 1.0, abs_tol=1e-9
    ):
        raise ValueError("pose rotation is not orthonormal")
    return R


def lowest_point(foot: FootGeometry, rotation: np.ndarray, translation: np.ndarray) -> tuple[np.ndarray, float]:
    """Deepest point of the foot ellipsoid below the ground plane.

    rotation/translation place the LEG frame in the world.  Returns the
    world-frame surface point with minimal z and the signed depth
    (-z of that point; positive means penetrating).

    Uses the ellipsoid support map: with A = R diag(a^2,b^2,c^2) R^T and
    search direction n = -z_hat, the extremal surface point is
    c + A n / sqrt(n^T A n).
    """
    R = _check_rotation(rotation)
    t = np.asarray(translation, dtype=float).reshape(3)
    center = t + R @ foot.center
    # direction -z expressed in the ellipsoid's local axes
    n_local = -R[2, :]
    axes_sq = foot.semi_axes**2
    u = axes_sq * n_local
    denom = math.sqrt(float(n_local @ u))
    point = center + R @ (u / denom)
    return point, -float(point[2])


def contact_force(
    depth: float,
    point_velocity: np.ndarray,
    params: ContactParams,
    point: np.ndarray | None = None,
) -> ContactForce:
    """Hunt-Crossley normal force plus smoothed Coulomb friction.

    depth is the current penetration (> 0), point_velocity the world
    velocity of the contact point on the foot.  The penetration rate is the
    downward speed of that point.  ``point`` is carried through for
    bookkeeping and defaults to the origin.
    """
    v = np.asarray(point_velocity, dtype=float).reshape(3)
    xdot = -v[2]  # penetration grows as the point moves down
    fn = params.stiffness * depth * (1.0 + params.dissipation * xdot)
    if fn < 0.0:
        fn = 0.0
    vt = np.array([v[0], v[1], 0.0])
    speed = math.hypot(vt[0], vt[1])
    if speed > 0.0 and fn > 0.0:
        friction = -params.friction_mu * fn * math.tanh(speed / params.regularization_velocity) / speed * vt
    else:
        friction = np.zeros(3)
    where = np.zeros(3) if point is None else point
    return ContactForce(point=where, normal_force=fn, friction_force=friction, penetration=depth)


SPIN_TORQUE_COEFF = 3.0 * math.pi / 16.0


def patch_radius_coefficient(foot: FootGeometry) -> float:
    """sqrt of the foot's effective curvature radius at its lowest point.

    The elastic contact patch radius is approximated as sqrt(R_eff * depth)
    with R_eff the geometric mean of the two tangential curvature radii of
    the ellipsoid at the bottom pole (a^2/c and b^2/c).  The returned
    coefficient is sqrt(R_eff), so r_patch = coeff * sqrt(depth).
    """
    a, b, c = foot.semi_axes
    return math.sqrt(a * b / c)


def spin_torque(depth: float, normal_force: float, spin_rate: float, params: ContactParams, patch_coeff: float) -> float:
    """Drilling-friction torque about the contact normal.

    A point contact offers no resistance to spinning in place, which lets a
    single-stance walker pirouette unphysically; a finite patch of radius
    r_patch does.  Modeled as a uniform circular pressure patch with the same
    regularized Coulomb law as sliding: |torque| <= (3 pi/16) mu N r_patch.
    """
    if depth <= 0.0 or normal_force <= 0.0:
        return 0.0
    r_patch = patch_coeff * math.sqrt(depth)
    slip = spin_rate * r_patch
    return -SPIN_TORQUE_COEFF * params.friction_mu * normal_force * r_patch * math.tanh(
        slip / params.regularization_velocity
    )


def rolling_damping_coefficient(depth: float, params: ContactParams, patch_coeff: float) -> float:
    """Viscous torque coefficient resisting rocking of the contact patch.

    Treating the Hunt-Crossley force as a damped foundation distributed over
    the elastic patch, tilting the foot at angular rate w moves each patch
    point normally at w*x, and the resulting damping pressure integrates to
    a torque -c*w about either tangential axis with
    c = k * depth * d * r_patch^2 / 4 (uniform circular patch).  A lone
    support point has no such term, which leaves fore-aft rocking of a
    curved foot essentially undamped.
    """
    if depth <= 0.0:
        return 0.0
    r_patch = patch_coeff * math.sqrt(depth)
    return 0.25 * params.stiffness * depth * params.dissipation * r_patch * r_patch


def contact_moment(
    depth: float,
    normal_force: float,
    angular_velocity: np.ndarray,
    params: ContactParams,
    patch_coeff: float,
) -> np.ndarray:
    """Full patch moment: rolling damping (x, y) plus drilling friction (z).

    angular_velocity is the foot's world angular velocity; the ground normal
    is +z.  Mirrors the simulation kernel exactly.
    """
    w = np.asarray(angular_velocity, dtype=float).reshape(3)
    if depth <= 0.0 or normal_force <= 0.0:
        return np.zeros(3)
    c = rolling_damping_coefficient(depth, params, patch_coeff)
    return np.array(
        [
            -c * w[0],
            -c * w[1],
            spin_torque(depth, normal_force, w[2], params, patch_coeff),
        ]
    )


def scale_contact_params(
    base: ContactParams, base_design: WalkerDesign, scaled_design: WalkerDesign
) -> ContactParams:
    """Carry contact parameters across a geometric rescaling.

    Keeps the contact dynamically similar to the base: static penetration
    stays the same fraction of leg length (stiffness recomputed from the
    scaled weight), and the velocity-dependent coefficients follow the
    sqrt(s) time scaling so the dimensionless touchdown damping d*v_td and
    slip regularization are scale-invariant.  Friction and the penetration
    fraction are dimensionless and unchanged.
    """
    s = scaled_design.leg_length / base_design.leg_length
    eps = base.max_penetration_fraction
    k_new = scaled_design.total_mass * scaled_design.gravity / (eps * scaled_design.leg_length)
    root_s = math.sqrt(s)
    return replace(
        base,
        stiffness=k_new,
        dissipation=base.dissipation / root_s,
        regularization_velocity=base.regularization_velocity * root_s,
    )
