"""Design, scaling, and mass-composition tests.

The half-ellipsoid shell properties are checked against an analytic
hemisphere result and against values frozen from an independent midpoint
Riemann quadrature (different scheme and nodes than the implementation).
"""

import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from walkerscale.control import BangBang, SinusoidalPosition
from walkerscale.model import (
    BUILTIN_NAMES,
    DesignError,
    FootGeometry,
    ScalingLaw,
    WalkerDesign,
    build_bodies,
    builtin_design,
    half_ellipsoid_shell,
    hip_frame_feet,
    scale_design,
    symmetric_feet,
)

G = 9.81


# frozen from an independent chunked midpoint-Riemann surface quadrature
# (3000 x 6000 nodes, agreement with half resolution ~1e-9)
SHELL_ORACLE = {
    (0.03, 0.02, 0.01): (
        -5.788609917152e-03,
        (1.640740191777e-04, 2.920765382898e-04, 3.731046727508e-04),
    ),
    (0.025, 0.030, 0.025): (
        -1.268154921104e-02,
        (4.992671591606e-04, 4.263115368204e-04, 4.992671516171e-04),
    ),
}


class TestShellProperties:
    def test_hemisphere_matches_analytic(self):
        # uniform shell over the lower hemisphere: com_z = -r/2 and all
        # three central-frame moments about the sphere centre are (2/3) r^2
        r = 0.1
        com, inertia = half_ellipsoid_shell((r, r, r))
        assert com[0] == pytest.approx(0.0, abs=1e-12)
        assert com[1] == pytest.approx(0.0, abs=1e-12)
        assert com[2] == pytest.approx(-r / 2.0, abs=1e-9)
        for i in range(3):
            assert inertia[i, i] == pytest.approx(2.0 / 3.0 * r * r, abs=1e-9)
        assert np.max(np.abs(inertia - np.diag(np.diag(inertia)))) < 1e-12

    @pytest.mark.parametrize("axes", sorted(SHELL_ORACLE))
    def test_matches_independent_quadrature(self, axes):
        com_z_ref, diag_ref = SHELL_ORACLE[axes]
        com, inertia = half_ellipsoid_shell(axes)
        assert com[2] == pytest.approx(com_z_ref, abs=1e-8)
        assert abs(com[0]) < 1e-12 and abs(com[1]) < 1e-12
        for i in range(3):
            assert inertia[i, i] == pytest.approx(diag_ref[i], abs=1e-8)

    @given(
        a=st.floats(0.005, 0.3),
        b=st.floats(0.005, 0.3),
        c=st.floats(0.005, 0.3),
    )
    @settings(max_examples=40, deadline=None)
    def test_shell_is_physical(self, a, b, c):
        com, inertia = half_ellipsoid_shell((a, b, c))
        # CoM strictly inside the lower half, inertia symmetric positive
        # definite and satisfying the triangle inequalities
        assert -c < com[2] < 0.0
        assert np.allclose(inertia, inertia.T)
        eig = np.linalg.eigvalsh(inertia)
        assert eig[0] > 0.0
        d = np.sort(np.diag(inertia))
        assert d[2] <= d[0] + d[1] + 1e-12


class TestBuiltinDesigns:
    @pytest.mark.parametrize("name", BUILTIN_NAMES)
    def test_builtins_are_well_formed(self, name):
        d = builtin_design(name)
        assert d.name == name
        assert d.leg_length > 0.0
        assert d.body_length >= d.leg_length
        # mirrored feet
        l, r = d.foot_left, d.foot_right
        assert l.semi_axes == pytest.approx(r.semi_axes)
        assert l.center_offset[1] == pytest.approx(-r.center_offset[1])
        # a plumb standing foot touches the ground exactly
        assert l.center_offset[2] == pytest.approx(l.semi_axis_z - d.leg_length)

    def test_unknown_name_raises(self):
        with pytest.raises(DesignError, match="unknown builtin"):
            builtin_design("mcx9")

    def test_published_dimensions(self):
        m = builtin_design("mugatu")
        assert (m.leg_length, m.body_length, m.total_mass) == (0.153, 0.186, 0.900)
        zs = builtin_design("zippy_spherical")
        assert (zs.leg_length, zs.total_mass) == (0.0243, 0.025)
        ze = builtin_design("zippy_ellipsoidal")
        assert (ze.leg_length, ze.total_mass) == (0.0247, 0.025)
        assert ze.foot_left.semi_axes == pytest.approx((0.025, 0.030, 0.025))


class TestDesignValidation:
    def base(self, **kw):
        left, right = symmetric_feet((0.05, 0.05, 0.05), (0.0, 0.01, 0.05 - 0.15))
        args = dict(
            name="t",
            leg_length=0.15,
            body_length=0.2,
            total_mass=1.0,
            foot_left=left,
            foot_right=right,
            controller=SinusoidalPosition(0.3, 2.0, 10.0, 0.1, 0.5),
        )
        args.update(kw)
        return WalkerDesign(**args)

    def test_valid_design_builds(self):
        self.base()

    @pytest.mark.parametrize(
        "kw",
        [
            dict(leg_length=0.0),
            dict(total_mass=-1.0),
            dict(leg_mass_fraction=0.0),
            dict(leg_mass_fraction=0.6),
            dict(body_length=0.1),
            dict(gravity=0.0),
        ],
    )
    def test_invalid_designs_raise(self, kw):
        with pytest.raises(DesignError):
            self.base(**kw)

    def test_foot_geometry_rejects_nonpositive_axes(self):
        with pytest.raises(ValueError):
            FootGeometry(0.0, 0.05, 0.05, (0.0, 0.0, 0.0))


class TestScaling:
    def test_scaling_law_defaults(self):
        law = ScalingLaw(mass_exponent=3.0)
        assert law.frequency_exponent == -0.5

    @pytest.mark.parametrize("k", [2.0, 3.0, 1.95])
    def test_scale_design_exact_ratios(self, k):
        base = builtin_design("mugatu")
        s = 1.0 / base.leg_length
        scaled = scale_design(base, 1.0, ScalingLaw(mass_exponent=k))
        assert scaled.leg_length == pytest.approx(1.0)
        assert scaled.body_length == pytest.approx(base.body_length * s)
        assert scaled.total_mass == pytest.approx(base.total_mass * s**k)
        assert scaled.foot_left.semi_axis_x == pytest.approx(base.foot_left.semi_axis_x * s)
        assert scaled.foot_left.center_offset[1] == pytest.approx(
            base.foot_left.center_offset[1] * s
        )
        assert scaled.leg_com_lateral_offset == pytest.approx(base.leg_com_lateral_offset * s)
        # dimensionless knobs untouched
        assert scaled.leg_mass_fraction == base.leg_mass_fraction
        assert scaled.leg_com_height_fraction == base.leg_com_height_fraction
        # frequency follows 1/sqrt(s); torque gains stay (torque_scale is the
        # experiment layer's job)
        assert scaled.controller.frequency == pytest.approx(base.controller.frequency / math.sqrt(s))
        assert scaled.controller.torque_limit == base.controller.torque_limit

    def test_scale_design_round_trip(self):
        base = builtin_design("zippy_spherical")
        law = ScalingLaw(mass_exponent=2.0)
        there = scale_design(base, 0.5, law)
        back = scale_design(there, base.leg_length, law)
        assert back.total_mass == pytest.approx(base.total_mass, rel=1e-12)
        assert back.foot_left.semi_axis_y == pytest.approx(base.foot_left.semi_axis_y, rel=1e-12)

    @pytest.mark.parametrize("target", [0.004, 5.5, -1.0])
    def test_out_of_range_scale_raises(self, target):
        with pytest.raises(DesignError):
            scale_design(builtin_design("mugatu"), target, ScalingLaw(mass_exponent=3.0))


class TestBodyComposition:
    @pytest.mark.parametrize("name", BUILTIN_NAMES)
    def test_mass_conserved_and_split_evenly(self, name):
        d = builtin_design(name)
        left, right, axis = build_bodies(d)
        assert left.mass + right.mass == pytest.approx(d.total_mass, rel=1e-12)
        assert left.mass == pytest.approx(right.mass, rel=1e-12)
        assert axis == pytest.approx([0.0, 1.0, 0.0])

    @pytest.mark.parametrize("name", BUILTIN_NAMES)
    def test_com_placement_honored_exactly(self, name):
        # the composition solves the box centre so the leg CoM lands exactly
        # on the requested height fraction and lateral offset
        d = builtin_design(name)
        left, right, _ = build_bodies(d)
        foot_bottom = d.foot_left.center_offset[2] - d.foot_left.semi_axis_z
        want_z = foot_bottom + d.leg_com_height_fraction * d.leg_length
        assert left.com[2] == pytest.approx(want_z, abs=1e-12)
        assert right.com[2] == pytest.approx(want_z, abs=1e-12)
        assert left.com[1] == pytest.approx(+d.leg_com_lateral_offset, abs=1e-12)
        assert right.com[1] == pytest.approx(-d.leg_com_lateral_offset, abs=1e-12)
        assert left.com[0] == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("name", BUILTIN_NAMES)
    def test_inertia_physical_and_mirrored(self, name):
        d = builtin_design(name)
        left, right, _ = build_bodies(d)
        for body in (left, right):
            I = body.inertia
            assert np.allclose(I, I.T)
            eig = np.linalg.eigvalsh(I)
            assert eig[0] > 0.0
            dg = np.sort(np.diag(I))
            assert dg[2] <= dg[0] + dg[1] + 1e-15
        # mirror across the x-z plane: diagonal equal, xy and yz products flip
        assert np.allclose(np.diag(left.inertia), np.diag(right.inertia))
        assert left.inertia[0, 1] == pytest.approx(-right.inertia[0, 1], abs=1e-15)
        assert left.inertia[1, 2] == pytest.approx(-right.inertia[1, 2], abs=1e-15)
        assert left.inertia[0, 2] == pytest.approx(right.inertia[0, 2], abs=1e-15)

    def test_inertia_scales_as_mass_times_length_squared(self):
        base = builtin_design("mugatu")
        bl, _, _ = build_bodies(base)
        for k in (2.0, 3.0):
            s = 3.0
            scaled = scale_design(base, base.leg_length * s, ScalingLaw(mass_exponent=k))
            sl, _, _ = build_bodies(scaled)
            assert np.allclose(sl.inertia, bl.inertia * s ** (k + 2.0), rtol=1e-10)
            assert np.allclose(sl.com, bl.com * s, rtol=1e-10)

    def test_excessive_shell_fraction_raises(self):
        d = replace(builtin_design("mugatu"), foot_shell_mass_fraction=1.0)
        with pytest.raises(DesignError, match="shell"):
            build_bodies(d)

    def test_hip_frame_feet_shift_by_hip_offset(self):
        d = builtin_design("mugatu")
        shifted = replace(d, hip_offset=(0.01, -0.02, 0.03))
        fl, fr = hip_frame_feet(shifted)
        base_l = d.foot_left.center_offset
        assert fl.center_offset == pytest.approx(
            (base_l[0] - 0.01, base_l[1] + 0.02, base_l[2] - 0.03)
        )
        assert fr.semi_axes == pytest.approx(d.foot_right.semi_axes)
