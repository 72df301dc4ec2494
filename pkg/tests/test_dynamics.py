"""Dynamics and integrator tests against closed-form mechanics.

The oracles here recompute centre of mass, energy, and angular momentum
from first principles (textbook rigid-body formulas, no engine helpers) and
check free flight, hover equilibrium, static ground reaction, and the
semi-implicit update relations.
"""

import math

import numpy as np
import pytest

from walkerscale.contact import contact_force, default_contact_params, lowest_point
from walkerscale.dynamics import (
    LEFT,
    RIGHT,
    WalkerState,
    Wrench,
    forward_dynamics,
    quat_to_rot,
    rot_y,
    standing_state,
    step,
    time_step_for,
)
from walkerscale.model import builtin_design, build_bodies, hip_frame_feet

G = 9.81


def body_kinematics(bodies, state):
    """World CoM positions, velocities, and angular velocities of both legs."""
    R_l = quat_to_rot(state.base_orientation)
    R_r = R_l @ rot_y(state.hip_angle)
    w_l = R_l @ state.base_angular_velocity
    w_r = w_l + state.hip_rate * R_l[:, 1]
    p = state.base_position
    out = []
    for body, R, w in ((bodies[0], R_l, w_l), (bodies[1], R_r, w_r)):
        r = p + R @ body.com
        v = state.base_linear_velocity + np.cross(w, R @ body.com)
        out.append((body, R, r, v, w))
    return out


def total_com(bodies, state):
    kin = body_kinematics(bodies, state)
    M = sum(b.mass for b, *_ in kin)
    r = sum(b.mass * ri for b, _, ri, _, _ in kin) / M
    v = sum(b.mass * vi for b, _, _, vi, _ in kin) / M
    return r, v, M


def total_energy(bodies, state, gravity=G):
    e = 0.0
    for body, R, r, v, w in body_kinematics(bodies, state):
        I_w = R @ body.inertia @ R.T
        e += 0.5 * body.mass * float(v @ v) + 0.5 * float(w @ (I_w @ w))
        e += body.mass * gravity * r[2]
    return e


def angular_momentum_about_com(bodies, state):
    rc, vc, _ = total_com(bodies, state)
    L = np.zeros(3)
    for body, R, r, v, w in body_kinematics(bodies, state):
        L += body.mass * np.cross(r - rc, v - vc)
        L += R @ body.inertia @ R.T @ w
    return L


@pytest.fixture(scope="module")
def mugatu():
    design = builtin_design("mugatu")
    left, right, _ = build_bodies(design)
    return design, (left, right)


class TestBallisticFlight:
    def test_com_parabola_energy_and_momentum(self, mugatu):
        design, bodies = mugatu
        state = WalkerState(
            base_position=np.array([0.0, 0.0, 2.0]),
            base_orientation=np.array([1.0, 0.0, 0.0, 0.0]),
            base_linear_velocity=np.array([0.4, -0.1, 1.5]),
            base_angular_velocity=np.array([0.8, 1.2, -0.5]),
            hip_angle=0.2,
            hip_rate=1.0,
        )
        r0, v0, M = total_com(bodies, state)
        e0 = total_energy(bodies, state)
        l0 = angular_momentum_about_com(bodies, state)

        dt = 2.0e-4
        n = int(round(1.0 / dt))
        for _ in range(n):
            state = step(bodies, state, 0.0, (), dt, gravity=G)

        t = n * dt
        r1, v1, _ = total_com(bodies, state)
        # closed-form projectile motion of the centre of mass; the hinge and
        # the tumbling are internal and must not disturb it
        expect = r0 + v0 * t + 0.5 * np.array([0.0, 0.0, -G]) * t * t
        drop = 0.5 * G * t * t
        assert np.linalg.norm(r1 - expect) < 1e-3 * drop
        assert np.linalg.norm(v1 - (v0 + np.array([0.0, 0.0, -G]) * t)) < 1e-3 * G * t
        # energy drift below 0.1% over one second of flight
        e1 = total_energy(bodies, state)
        ke_scale = e0 - M * G * min(r0[2], r1[2])
        assert abs(e1 - e0) < 1e-3 * abs(ke_scale)
        # uniform gravity exerts no torque about the centre of mass
        l1 = angular_momentum_about_com(bodies, state)
        assert np.linalg.norm(l1 - l0) < 1e-3 * np.linalg.norm(l0)

    def test_quaternion_stays_unit(self, mugatu):
        design, bodies = mugatu
        state = WalkerState(
            base_position=np.array([0.0, 0.0, 5.0]),
            base_orientation=np.array([1.0, 0.0, 0.0, 0.0]),
            base_linear_velocity=np.zeros(3),
            base_angular_velocity=np.array([2.0, -3.0, 1.0]),
            hip_angle=0.0,
            hip_rate=0.5,
        )
        dt = 1.0e-4
        worst = 0.0
        for i in range(20000):
            state = step(bodies, state, 0.0, (), dt, gravity=0.0)
            if i % 100 == 0:
                q = state.base_orientation
                worst = max(worst, abs(float(q @ q) - 1.0))
        # the step renormalizes, so the norm should sit at machine precision
        assert worst < 1e-12


class TestHoverEquilibrium:
    def test_weight_cancelling_wrenches_zero_all_accelerations(self, mugatu):
        # lifting each body at its own CoM by exactly its weight must null
        # every generalized acceleration, including the hip's
        design, bodies = mugatu
        state = standing_state(design, roll=0.1, pitch=-0.05)
        state = WalkerState(
            base_position=state.base_position + np.array([0.0, 0.0, 0.5]),
            base_orientation=state.base_orientation,
            base_linear_velocity=np.zeros(3),
            base_angular_velocity=np.zeros(3),
            hip_angle=0.3,
            hip_rate=0.0,
        )
        hold = [
            (LEFT, Wrench(force=np.array([0.0, 0.0, bodies[0].mass * G]))),
            (RIGHT, Wrench(force=np.array([0.0, 0.0, bodies[1].mass * G]))),
        ]
        a_lin, a_ang, a_hip = forward_dynamics(bodies, state, 0.0, external=hold, gravity=G)
        assert np.linalg.norm(a_lin) < 1e-9
        assert np.linalg.norm(a_ang) < 1e-9
        assert abs(a_hip) < 1e-9

    def test_point_force_pair_cancels(self, mugatu):
        design, bodies = mugatu
        state = standing_state(design, roll=0.07)
        point = state.base_position + np.array([0.05, 0.02, -0.1])
        pair = [
            (LEFT, Wrench(force=np.array([3.0, -1.0, 2.0]), frame=("world_at_point", point))),
            (LEFT, Wrench(force=np.array([-3.0, 1.0, -2.0]), frame=("world_at_point", point))),
        ]
        ref = forward_dynamics(bodies, state, 0.0, gravity=G)
        got = forward_dynamics(bodies, state, 0.0, external=pair, gravity=G)
        for a, b in zip(ref, got):
            assert np.asarray(a) == pytest.approx(np.asarray(b), abs=1e-12)


class TestSemiImplicitUpdate:
    def test_velocity_then_position_relations(self, mugatu):
        design, bodies = mugatu
        state = WalkerState(
            base_position=np.array([0.1, -0.2, 1.0]),
            base_orientation=np.array([1.0, 0.0, 0.0, 0.0]),
            base_linear_velocity=np.array([0.3, 0.1, -0.2]),
            base_angular_velocity=np.array([0.5, -0.4, 0.2]),
            hip_angle=-0.1,
            hip_rate=0.7,
        )
        dt = 5.0e-4
        a_lin, a_ang, a_hip = forward_dynamics(bodies, state, 0.02, gravity=G)
        new = step(bodies, state, 0.02, (), dt, gravity=G)
        R = quat_to_rot(state.base_orientation)
        w_world_new = R @ state.base_angular_velocity + a_ang * dt
        assert new.base_linear_velocity == pytest.approx(
            state.base_linear_velocity + a_lin * dt, rel=1e-12, abs=1e-14
        )
        assert new.hip_rate == pytest.approx(state.hip_rate + a_hip * dt, rel=1e-12)
        assert new.base_position == pytest.approx(
            state.base_position + new.base_linear_velocity * dt, rel=1e-12, abs=1e-15
        )
        # orientation advanced by the exponential map of the new world rate
        R_new = quat_to_rot(new.base_orientation)
        dR = R_new @ R.T
        angle = math.acos(min(1.0, max(-1.0, (np.trace(dR) - 1.0) / 2.0)))
        assert angle == pytest.approx(np.linalg.norm(w_world_new) * dt, rel=1e-6)
        assert new.time == pytest.approx(state.time + dt)

    def test_rejects_nonpositive_dt(self, mugatu):
        design, bodies = mugatu
        state = standing_state(design)
        with pytest.raises(ValueError):
            step(bodies, state, 0.0, (), 0.0)


class TestStaticGroundReaction:
    def test_settled_normal_forces_sum_to_weight(self, mugatu):
        design, bodies = mugatu
        contact = default_contact_params(design)
        feet = hip_frame_feet(design)
        state = standing_state(design)
        dt = time_step_for(design, contact)
        n_settle = int(round(1.0 / dt))
        n_avg = int(round(0.3 / dt))
        total = []
        for i in range(n_settle + n_avg):
            R = quat_to_rot(state.base_orientation)
            forces = []
            fn_sum = 0.0
            for body_id, foot in ((LEFT, feet[0]), (RIGHT, feet[1])):
                Rb = R if body_id == LEFT else R @ rot_y(state.hip_angle)
                point, depth = lowest_point(foot, Rb, state.base_position)
                if depth <= 0.0:
                    continue
                w_world = R @ state.base_angular_velocity
                if body_id == RIGHT:
                    w_world = w_world + state.hip_rate * R[:, 1]
                v_point = state.base_linear_velocity + np.cross(
                    w_world, point - state.base_position
                )
                cf = contact_force(depth, v_point, contact, point=point)
                forces.append((body_id, cf))
                fn_sum += cf.normal_force
            state = step(bodies, state, 0.0, forces, dt, gravity=design.gravity)
            if i >= n_settle:
                total.append(fn_sum)
        weight = design.total_mass * design.gravity
        assert np.mean(total) == pytest.approx(weight, rel=5e-3)


class TestStandingState:
    def test_feet_touch_exactly_at_zero_attitude(self, mugatu):
        design, _ = mugatu
        state = standing_state(design)
        R = quat_to_rot(state.base_orientation)
        for foot in hip_frame_feet(design):
            _, depth = lowest_point(foot, R, state.base_position)
            assert depth == pytest.approx(0.0, abs=1e-12)

    def test_perturbed_pose_rests_on_one_foot(self, mugatu):
        design, _ = mugatu
        state = standing_state(design, roll=0.05)
        R = quat_to_rot(state.base_orientation)
        depths = [
            lowest_point(foot, R, state.base_position)[1] for foot in hip_frame_feet(design)
        ]
        assert max(depths) == pytest.approx(0.0, abs=1e-12)
        assert min(depths) < -1e-5

    def test_state_validation(self):
        with pytest.raises(ValueError, match="unit length"):
            WalkerState(
                base_position=np.zeros(3),
                base_orientation=np.array([1.0, 0.2, 0.0, 0.0]),
                base_linear_velocity=np.zeros(3),
                base_angular_velocity=np.zeros(3),
                hip_angle=0.0,
                hip_rate=0.0,
            )
        with pytest.raises(ValueError, match="finite"):
            WalkerState(
                base_position=np.array([np.nan, 0.0, 0.0]),
                base_orientation=np.array([1.0, 0.0, 0.0, 0.0]),
                base_linear_velocity=np.zeros(3),
                base_angular_velocity=np.zeros(3),
                hip_angle=0.0,
                hip_rate=0.0,
            )


class TestTimeStep:
    def test_min_of_three_bounds(self, mugatu):
        design, bodies = mugatu
        contact = default_contact_params(design)
        dt = time_step_for(design, contact)
        f = design.controller.frequency
        m_min = min(b.mass for b in bodies)
        dt_stride = 1.0 / f / 5000.0
        dt_contact = (2.0 * math.pi / 20.0) * math.sqrt(m_min / contact.stiffness)
        dt_friction = (
            0.5 * m_min * contact.regularization_velocity
            / (contact.friction_mu * design.total_mass * design.gravity)
        )
        assert dt == pytest.approx(min(dt_stride, dt_contact, dt_friction), rel=1e-12)

    def test_scales_with_sqrt_of_length(self):
        from walkerscale.experiments import scaled_variant

        base = builtin_design("mugatu")
        dt0 = time_step_for(base, default_contact_params(base))
        for s in (0.25, 4.0):
            design, contact = scaled_variant(base, base.leg_length * s, 3.0)
            dt1 = time_step_for(design, contact)
            assert dt1 / dt0 == pytest.approx(math.sqrt(s), rel=1e-9)
