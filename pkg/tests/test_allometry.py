"""Power-law fitting and survey regression tests.

The fitting oracle is an independent closed-form OLS recomputation (normal
equations written out longhand), plus numpy.polyfit as a second opinion.
"""

import io
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from walkerscale.allometry import (
    GLOBAL_GROUP,
    PowerLawFit,
    SurveyFormatError,
    SurveyRecord,
    compare_to_reference,
    fit_power_law,
    load_survey,
    reference_interval,
    regressions_markdown,
    survey_regressions,
)


def ols_log10_oracle(points):
    """Closed-form least squares on (log10 x, log10 y), no shortcuts."""
    lx = [math.log10(x) for x, _ in points]
    ly = [math.log10(y) for _, y in points]
    n = len(points)
    mx = sum(lx) / n
    my = sum(ly) / n
    sxx = sum((v - mx) ** 2 for v in lx)
    sxy = sum((a - mx) * (b - my) for a, b in zip(lx, ly))
    slope = sxy / sxx
    intercept = my - slope * mx
    ss_res = sum((b - (intercept + slope * a)) ** 2 for a, b in zip(lx, ly))
    ss_tot = sum((b - my) ** 2 for b in ly)
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return 10.0**intercept, slope, r2


class TestFitPowerLaw:
    def test_exact_power_law(self):
        xs = np.array([0.01, 0.1, 0.5, 1.0, 2.0, 10.0])
        fit = fit_power_law([(x, 2.0 * x**1.95) for x in xs])
        assert fit.coefficient == pytest.approx(2.0, abs=1e-10)
        assert fit.exponent == pytest.approx(1.95, abs=1e-10)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-10)
        assert fit.n == len(xs)

    def test_constant_y_gives_zero_exponent(self):
        fit = fit_power_law([(x, 7.5) for x in (0.2, 1.0, 3.0, 40.0)])
        assert fit.exponent == pytest.approx(0.0, abs=1e-12)
        assert fit.coefficient == pytest.approx(7.5, rel=1e-12)
        assert fit.r_squared == 1.0

    def test_matches_independent_oracle_on_noisy_data(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            n = rng.integers(3, 40)
            x = 10.0 ** rng.uniform(-2, 2, n)
            b_true = rng.uniform(-3, 3)
            a_true = 10.0 ** rng.uniform(-1, 1)
            y = a_true * x**b_true * 10.0 ** rng.normal(0.0, 0.05, n)
            if np.ptp(np.log10(x)) < 1e-9:
                continue
            fit = fit_power_law(list(zip(x, y)))
            a_ref, b_ref, r2_ref = ols_log10_oracle(list(zip(x, y)))
            assert fit.exponent == pytest.approx(b_ref, abs=1e-12)
            assert math.log10(fit.coefficient) == pytest.approx(math.log10(a_ref), abs=1e-12)
            assert fit.r_squared == pytest.approx(min(max(r2_ref, 0.0), 1.0), abs=1e-12)

    def test_recovers_planted_exponent_under_noise(self):
        rng = np.random.default_rng(7)
        x = 10.0 ** rng.uniform(-1.5, 1.5, 100)
        y = 3.0 * x**2.5 * 10.0 ** rng.normal(0.0, 0.05, 100)
        fit = fit_power_law(list(zip(x, y)))
        assert 2.45 <= fit.exponent <= 2.55

    def test_polyfit_agreement(self):
        rng = np.random.default_rng(3)
        x = 10.0 ** rng.uniform(-1, 3, 25)
        y = 0.4 * x**1.3 * 10.0 ** rng.normal(0.0, 0.1, 25)
        fit = fit_power_law(list(zip(x, y)))
        slope, intercept = np.polyfit(np.log10(x), np.log10(y), 1)
        assert fit.exponent == pytest.approx(slope, abs=1e-10)
        assert fit.coefficient == pytest.approx(10**intercept, rel=1e-10)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            fit_power_law([(1.0, 1.0), (-2.0, 3.0)])
        with pytest.raises(ValueError):
            fit_power_law([(1.0, 0.0), (2.0, 3.0)])

    def test_rejects_short_input(self):
        with pytest.raises(ValueError):
            fit_power_law([(1.0, 1.0)])

    def test_rejects_degenerate_x(self):
        with pytest.raises(ValueError):
            fit_power_law([(2.0, 1.0), (2.0, 3.0)])

    @given(
        st.lists(
            st.tuples(
                st.floats(min_value=1e-3, max_value=1e3),
                st.floats(min_value=1e-3, max_value=1e3),
            ),
            min_size=2,
            max_size=30,
        )
    )
    @settings(max_examples=150, deadline=None)
    def test_permutation_invariance_and_bounds(self, pts):
        xs = [p[0] for p in pts]
        if max(xs) / min(xs) < 1.0 + 1e-6:
            return  # degenerate abscissa
        fit = fit_power_law(pts)
        rev = fit_power_law(list(reversed(pts)))
        assert fit.exponent == pytest.approx(rev.exponent, abs=1e-9)
        assert 0.0 <= fit.r_squared <= 1.0

    def test_unit_rescaling_shifts_only_coefficient(self):
        pts = [(0.1, 0.5), (0.5, 1.8), (1.1, 3.0), (4.0, 9.0)]
        fit_m = fit_power_law(pts)
        fit_mm = fit_power_law([(x, y * 1000.0) for x, y in pts])
        assert fit_mm.exponent == pytest.approx(fit_m.exponent, abs=1e-12)
        assert fit_mm.coefficient == pytest.approx(fit_m.coefficient * 1000.0, rel=1e-12)
        assert fit_mm.r_squared == pytest.approx(fit_m.r_squared, abs=1e-12)

    def test_predict(self):
        fit = PowerLawFit(coefficient=2.0, exponent=0.5, r_squared=1.0, n=5)
        assert fit.predict(4.0) == pytest.approx(4.0)


def make_csv(rows, header="name,morphology,leg_length_m,body_length_m,mass_kg,speed_mps,dof,source"):
    return header + "\n" + "\n".join(rows) + "\n"


class TestSurveyLoading:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "survey.csv"
        path.write_text(
            make_csv(
                [
                    "botA,lower_biped,0.3,0.5,4.0,0.6,6,ref1",
                    "botB,quadruped,0.5,0.9,20.0,,12,ref2",
                ]
            )
        )
        records = load_survey(path)
        assert len(records) == 2
        assert records[0].name == "botA"
        assert records[0].speed == 0.6
        assert records[1].speed is None
        assert records[1].dof == 12

    def test_empty_file_warns(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("name,morphology,leg_length_m,body_length_m,mass_kg,speed_mps,dof,source\n")
        with pytest.warns(UserWarning):
            assert load_survey(path) == []

    def test_negative_mass_rejected_with_line_number(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(make_csv(["botA,lower_biped,0.3,0.5,-1.0,0.6,6,r"]))
        with pytest.raises(SurveyFormatError, match="line 2"):
            load_survey(path)

    def test_unknown_morphology_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(make_csv(["botA,octopod,0.3,0.5,1.0,,,r"]))
        with pytest.raises(SurveyFormatError, match="morphology"):
            load_survey(path)

    def test_missing_column_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("name,morphology\nx,lower_biped\n")
        with pytest.raises(SurveyFormatError, match="missing"):
            load_survey(path)

    def test_comment_rows_skipped(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text(
            "# synthetic sample\n"
            + make_csv(["botA,hexapod,0.1,0.3,0.5,0.2,18,r"])
        )
        assert len(load_survey(path)) == 1

    def test_bundled_sample(self):
        import importlib.resources as res

        with res.as_file(res.files("walkerscale.data") / "survey_synthetic_sample.csv") as p:
            records = load_survey(p)
        assert len(records) == 47
        counts = {}
        for r in records:
            counts[r.morphology] = counts.get(r.morphology, 0) + 1
        assert counts == {
            "lower_biped": 10,
            "full_biped": 17,
            "quadruped": 14,
            "hexapod": 6,
        }


def synth_records(rng, morphology, n, b_mass=1.95, b_body=1.0):
    """Records whose mass and body length follow planted power laws of L."""
    out = []
    for i in range(n):
        L = 10.0 ** rng.uniform(-1.5, 0.5)
        out.append(
            SurveyRecord(
                name=f"{morphology}{i}",
                morphology=morphology,
                leg_length=L,
                body_length=2.0 * L**b_body * 10 ** rng.normal(0, 0.02),
                mass=5.0 * L**b_mass * 10 ** rng.normal(0, 0.02),
            )
        )
    return out


class TestSurveyRegressions:
    def test_recovers_planted_exponents_per_group(self):
        rng = np.random.default_rng(0)
        records = synth_records(rng, "lower_biped", 12) + synth_records(rng, "quadruped", 9)
        table = survey_regressions(records)
        assert set(table) == {"lower_biped", "quadruped", GLOBAL_GROUP}
        for group in table:
            fit = table[group]["mass_vs_leg"]
            assert fit.exponent == pytest.approx(1.95, abs=0.1)
            body = table[group]["body_length_vs_leg"]
            assert body.exponent == pytest.approx(1.0, abs=0.1)

    def test_single_record_group_warns_and_skips(self):
        rng = np.random.default_rng(1)
        records = synth_records(rng, "hexapod", 5) + synth_records(rng, "full_biped", 1)
        with pytest.warns(UserWarning, match="full_biped"):
            table = survey_regressions(records)
        assert "full_biped" not in table
        assert "hexapod" in table

    def test_markdown_render_shape(self):
        rng = np.random.default_rng(2)
        table = survey_regressions(synth_records(rng, "lower_biped", 8))
        md = regressions_markdown(table)
        assert "lower_biped" in md
        assert "x^" in md and "|" in md


class TestReferenceComparisons:
    def test_isometric_mass_deviation(self):
        fit = PowerLawFit(coefficient=1.0, exponent=2.12, r_squared=0.9, n=10)
        cmp = compare_to_reference(fit, "mass", "isometric")
        assert cmp.deviation == pytest.approx(-0.88, abs=1e-12)

    def test_biology_velocity_deviation(self):
        fit = PowerLawFit(coefficient=1.0, exponent=0.50, r_squared=0.9, n=10)
        cmp = compare_to_reference(fit, "velocity", "biology")
        assert cmp.deviation == pytest.approx(+0.25, abs=1e-12)

    def test_inside_interval_is_zero(self):
        fit = PowerLawFit(coefficient=1.0, exponent=2.7, r_squared=0.9, n=10)
        assert compare_to_reference(fit, "mass", "biology").deviation == 0.0

    def test_torque_needs_mass_law(self):
        lo, hi = reference_interval("torque", "isometric")
        assert (lo, hi) == (5.0, 5.0)  # tau ~ m L^2 = L^5 under isometry
        lo, hi = reference_interval("torque", "robotics")
        assert (lo, hi) == (3.0, 3.0)  # tau ~ m L = L^3 with m ~ L^2
        lo, hi = reference_interval("torque", "robotics", mass_exponent=3.0)
        assert (lo, hi) == (4.0, 4.0)

    def test_unknown_quantity_raises(self):
        with pytest.raises(ValueError):
            reference_interval("power", "isometric")
