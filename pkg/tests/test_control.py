"""Hip controller torque laws and their scaling rules."""

import math

import pytest
from hypothesis import given, settings, strategies as st

from walkerscale.control import (
    BangBang,
    SinusoidalPosition,
    controller_torque,
    default_controller,
    hardstop_torque,
    scale_controller,
    torque_amplitude,
    with_torque_amplitude,
)
from walkerscale.model import ScalingLaw

SINE = SinusoidalPosition(amplitude=0.35, frequency=1.9, kp=15.0, kd=0.25, torque_limit=0.30)
BANG = BangBang(torque=1.0e-3, frequency=4.6, hardstop_angle=0.35,
                hardstop_stiffness=0.08, hardstop_damping=4.0e-4)


class TestSinusoid:
    def test_tracks_commanded_trajectory(self):
        # PD torque recomputed longhand at a few probe points
        for t, q, qd in ((0.0, 0.0, 0.0), (0.11, 0.2, -0.5), (0.37, -0.1, 1.0)):
            w = 2.0 * math.pi * SINE.frequency
            q_cmd = SINE.amplitude * math.sin(w * t)
            qd_cmd = SINE.amplitude * w * math.cos(w * t)
            raw = SINE.kp * (q_cmd - q) + SINE.kd * (qd_cmd - qd)
            want = max(-SINE.torque_limit, min(SINE.torque_limit, raw))
            assert controller_torque(SINE, t, q, qd) == pytest.approx(want, rel=1e-12)

    @given(
        t=st.floats(0.0, 20.0),
        q=st.floats(-2.0, 2.0),
        qd=st.floats(-20.0, 20.0),
    )
    @settings(max_examples=300, deadline=None)
    def test_saturation_always_respected(self, t, q, qd):
        assert abs(controller_torque(SINE, t, q, qd)) <= SINE.torque_limit + 1e-15

    def test_zero_error_zero_torque(self):
        t = 0.25 / SINE.frequency  # command peak, qd_cmd = 0
        q = SINE.amplitude * math.sin(2.0 * math.pi * SINE.frequency * t)
        assert controller_torque(SINE, t, q, 0.0) == pytest.approx(0.0, abs=1e-12)


class TestBangBang:
    def test_square_wave_sign_follows_clock(self):
        f = BANG.frequency
        assert controller_torque(BANG, 0.1 / f, 0.0, 0.0) == pytest.approx(BANG.torque)
        assert controller_torque(BANG, 0.6 / f, 0.0, 0.0) == pytest.approx(-BANG.torque)
        assert controller_torque(BANG, 1.1 / f, 0.0, 0.0) == pytest.approx(BANG.torque)

    def test_hardstop_zero_inside_range(self):
        assert hardstop_torque(0.2, 5.0, 0.35, 10.0, 1.0) == 0.0
        assert hardstop_torque(-0.34, -9.0, 0.35, 10.0, 1.0) == 0.0

    def test_hardstop_restores_past_limit(self):
        k, d = 10.0, 0.5
        tau = hardstop_torque(0.40, 0.2, 0.35, k, d)
        assert tau == pytest.approx(-k * 0.05 - d * 0.2, rel=1e-12)
        tau = hardstop_torque(-0.50, -1.0, 0.35, k, d)
        assert tau == pytest.approx(-k * -0.15 - d * -1.0, rel=1e-12)

    def test_total_includes_hardstop(self):
        t = 0.1 / BANG.frequency
        q = BANG.hardstop_angle + 0.02
        want = BANG.torque + hardstop_torque(
            q, 0.0, BANG.hardstop_angle, BANG.hardstop_stiffness, BANG.hardstop_damping
        )
        assert controller_torque(BANG, t, q, 0.0) == pytest.approx(want, rel=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            BangBang(torque=0.0, frequency=1.0, hardstop_angle=0.3,
                     hardstop_stiffness=1.0, hardstop_damping=0.0)
        with pytest.raises(ValueError):
            BangBang(torque=1.0, frequency=1.0, hardstop_angle=2.0,
                     hardstop_stiffness=1.0, hardstop_damping=0.0)
        with pytest.raises(ValueError):
            BangBang(torque=1.0, frequency=1.0, hardstop_angle=0.3,
                     hardstop_stiffness=-1.0, hardstop_damping=0.0)
        with pytest.raises(ValueError):
            SinusoidalPosition(amplitude=0.3, frequency=-1.0, kp=1.0, kd=0.0, torque_limit=1.0)


class TestTorqueKnob:
    def test_amplitude_round_trip(self):
        assert torque_amplitude(SINE) == SINE.torque_limit
        assert torque_amplitude(BANG) == BANG.torque
        s2 = with_torque_amplitude(SINE, 0.7)
        assert s2.torque_limit == 0.7 and s2.kp == SINE.kp
        b2 = with_torque_amplitude(BANG, 2e-3)
        assert b2.torque == 2e-3 and b2.hardstop_stiffness == BANG.hardstop_stiffness

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            with_torque_amplitude(SINE, 0.0)


class TestControllerScaling:
    @pytest.mark.parametrize("spec", [SINE, BANG], ids=["sinusoid", "bangbang"])
    def test_frequency_and_torque_rules(self, spec):
        law = ScalingLaw(mass_exponent=2.0)
        s, ts = 4.0, 64.0
        scaled = scale_controller(spec, s, law, torque_scale=ts)
        assert scaled.frequency == pytest.approx(spec.frequency * s**-0.5, rel=1e-12)
        if isinstance(spec, SinusoidalPosition):
            assert scaled.amplitude == spec.amplitude
            assert scaled.kp == pytest.approx(spec.kp * ts, rel=1e-12)
            assert scaled.kd == pytest.approx(spec.kd * ts * math.sqrt(s), rel=1e-12)
            assert scaled.torque_limit == pytest.approx(spec.torque_limit * ts, rel=1e-12)
        else:
            assert scaled.hardstop_angle == spec.hardstop_angle
            assert scaled.torque == pytest.approx(spec.torque * ts, rel=1e-12)
            assert scaled.hardstop_stiffness == pytest.approx(
                spec.hardstop_stiffness * ts, rel=1e-12
            )
            assert scaled.hardstop_damping == pytest.approx(
                spec.hardstop_damping * ts * math.sqrt(s), rel=1e-12
            )

    def test_scaled_drive_is_dimensionless_invariant(self):
        # f * sqrt(L/g) fixed when torque_scale is the m*L ratio
        law = ScalingLaw(mass_exponent=3.0)
        for s in (0.1, 0.5, 8.0):
            scaled = scale_controller(BANG, s, law, torque_scale=s**4)
            assert scaled.frequency * math.sqrt(s) == pytest.approx(BANG.frequency, rel=1e-12)

    def test_rejects_bad_factors(self):
        law = ScalingLaw(mass_exponent=2.0)
        with pytest.raises(ValueError):
            scale_controller(SINE, -1.0, law)
        with pytest.raises(ValueError):
            scale_controller(SINE, 1.0, law, torque_scale=0.0)


class TestDefaults:
    def test_each_builtin_has_a_controller(self):
        assert isinstance(default_controller("mugatu"), SinusoidalPosition)
        assert isinstance(default_controller("zippy_spherical"), BangBang)
        assert isinstance(default_controller("zippy_ellipsoidal"), BangBang)
        with pytest.raises(ValueError):
            default_controller("nope")

    def test_published_drive_frequencies(self):
        assert default_controller("mugatu").frequency == pytest.approx(1.9)
        assert default_controller("zippy_spherical").frequency == pytest.approx(4.6)
        assert default_controller("zippy_ellipsoidal").frequency == pytest.approx(4.6)
