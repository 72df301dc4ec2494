"""Power-law fitting and the robot-survey regressions.

All fits are ordinary least squares on (log10 x, log10 y); the coefficient
is reported back in linear units so y = a * x**b.  R squared is computed in
log space, matching straight-line fits on log-log axes.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

MORPHOLOGIES = ("lower_biped", "full_biped", "quadruped", "hexapod")
GLOBAL_GROUP = "all"
RELATIONS = ("body_length_vs_leg", "mass_vs_leg", "mass_vs_body")

SURVEY_HEADER = ("name", "morphology", "leg_length_m", "body_length_m", "mass_kg", "speed_mps", "dof", "source")


@dataclass(frozen=True)
class PowerLawFit:
    coefficient: float  # value of y at x = 1
    exponent: float
    r_squared: float
    n: int

    def predict(self, x):
        return self.coefficient * np.asarray(x, dtype=float) ** self.exponent


def fit_power_law(points: Iterable[tuple[float, float]]) -> PowerLawFit:
    """OLS in log10 space over strictly positive (x, y) pairs."""
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be (x, y) pairs")
    n = pts.shape[0]
    if n < 2:
        raise ValueError("need at least two points to fit a power law")
    if np.any(pts <= 0.0) or not np.all(np.isfinite(pts)):
        raise ValueError("power-law fits need strictly positive finite data")
    lx = np.log10(pts[:, 0])
    ly = np.log10(pts[:, 1])
    mx = lx.mean()
    my = ly.mean()
    sxx = float(np.sum((lx - mx) ** 2))
    if sxx == 0.0:
        raise ValueError("x values are all identical; exponent is undefined")
    sxy = float(np.sum((lx - mx) * (ly - my)))
    slope = sxy / sxx
    intercept = my - slope * mx
    resid = ly - (slope * lx + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((ly - my) ** 2))
    if ss_tot == 0.0:
        # constant y: the flat line fits exactly
        r2 = 1.0
    else:
        r2 = 1.0 - ss_res / ss_tot
        r2 = min(max(r2, 0.0), 1.0)
    return PowerLawFit(coefficient=10.0**intercept, exponent=slope, r_squared=r2, n=n)


@dataclass(frozen=True)
class SurveyRecord:
    name: str
    morphology: str
    leg_length: float
    body_length: float
    mass: float
    speed: Optional[float] = None
    dof: Optional[int] = None
    source: str = ""

    def __post_init__(self):
        if self.morphology not in MORPHOLOGIES:
            raise ValueError(f"unknown morphology {self.morphology!r}")
        for label, value in (("leg_length", self.leg_length), ("body_length", self.body_length), ("mass", self.mass)):
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0.0):
                raise ValueError(f"{label} must be positive, got {value!r}")
        if self.speed is not None and (not math.isfinite(self.speed) or self.speed <= 0.0):
            raise ValueError(f"speed must be positive when present, got {self.speed!r}")
        if self.dof is not None and self.dof < 1:
            raise ValueError(f"dof must be a positive count, got {self.dof!r}")


class SurveyFormatError(ValueError):
    pass


def _parse_row(row: dict, line_no: int) -> SurveyRecord:
    def required(key):
        val = (row.get(key) or "").strip()
        if not val:
            raise SurveyFormatError(f"line {line_no}: missing required field {key!r}")
        return val

    def positive_float(key):
        raw = required(key)
        try:
            val = float(raw)
        except ValueError:
            raise SurveyFormatError(f"line {line_no}: {key}={raw!r} is not a number") from None
        if not math.isfinite(val) or val <= 0.0:
            raise SurveyFormatError(f"line {line_no}: {key}={raw!r} must be positive")
        return val

    morphology = required("morphology")
    if morphology not in MORPHOLOGIES:
        raise SurveyFormatError(f"line {line_no}: unknown morphology {morphology!r}")
    speed_raw = (row.get("speed_mps") or "").strip()
    dof_raw = (row.get("dof") or "").strip()
    speed = None
    if speed_raw:
        try:
            speed = float(speed_raw)
        except ValueError:
            raise SurveyFormatError(f"line {line_no}: speed_mps={speed_raw!r} is not a number") from None
        if not math.isfinite(speed) or speed <= 0.0:
            raise SurveyFormatError(f"line {line_no}: speed_mps={speed_raw!r} must be positive")
    dof = None
    if dof_raw:
        try:
            dof = int(dof_raw)
        except ValueError:
            raise SurveyFormatError(f"line {line_no}: dof={dof_raw!r} is not an integer") from None
        if dof < 1:
            raise SurveyFormatError(f"line {line_no}: dof={dof_raw!r} must be positive")
    return SurveyRecord(
        name=required("name"),
        morphology=morphology,
        leg_length=positive_float("leg_length_m"),
        body_length=positive_float("body_length_m"),
        mass=positive_float("mass_kg"),
        speed=speed,
        dof=dof,
        source=(row.get("source") or "").strip(),
    )


def load_survey(path) -> list[SurveyRecord]:
    """Read survey records from CSV, rejecting malformed rows loudly.

    Optional fields (speed_mps, dof) may be blank; required ones may not.
    Raises SurveyFormatError with the offending line number on bad data.
    """
    records: list[SurveyRecord] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(row for row in fh if not row.lstrip().startswith("#"))
        if reader.fieldnames is None:
            warnings.warn(f"survey file {path} is empty", stacklevel=2)
            return records
        missing = [k for k in SURVEY_HEADER if k not in reader.fieldnames]
        if missing:
            raise SurveyFormatError(f"survey header is missing columns: {', '.join(missing)}")
        for row in reader:
            records.append(_parse_row(row, reader.line_num))
    if not records:
        warnings.warn(f"survey file {path} contains no records", stacklevel=2)
    return records


def _relation_points(records: Sequence[SurveyRecord], relation: str):
    if relation == "body_length_vs_leg":
        return [(r.leg_length, r.body_length) for r in records]
    if relation == "mass_vs_leg":
        return [(r.leg_length, r.mass) for r in records]
    if relation == "mass_vs_body":
        return [(r.body_length, r.mass) for r in records]
    raise ValueError(f"unknown relation {relation!r}")


def survey_regressions(records: Sequence[SurveyRecord]) -> dict[str, dict[str, PowerLawFit]]:
    """Per-morphology and pooled power-law fits for the three size relations.

    Returns {group: {relation: fit}}; groups with fewer than two records are
    omitted with a warning.
    """
    groups: dict[str, list[SurveyRecord]] = {m: [] for m in MORPHOLOGIES}
    for r in records:
        groups[r.morphology].append(r)
    groups[GLOBAL_GROUP] = list(records)
    out: dict[str, dict[str, PowerLawFit]] = {}
    for name, members in groups.items():
        if len(members) < 2:
            if members:
                warnings.warn(f"group {name!r} has only {len(members)} record(s); skipped", stacklevel=2)
            continue
        out[name] = {rel: fit_power_law(_relation_points(members, rel)) for rel in RELATIONS}
    return out


# --- reference scaling laws ----------------------------------------------

QUANTITIES = ("body_length", "mass", "velocity", "torque")
BASES = ("isometric", "biology", "robotics")

# exponent intervals vs leg length; torque entries given relative to mass
# (tau ~ m * L^p) are resolved with each basis's own mass law
_REFERENCE_TABLE = {
    "isometric": {
        "body_length": (1.0, 1.0),
        "mass": (3.0, 3.0),
        "velocity": (0.5, 0.5),
        "torque_rel_mass": (2.0, 2.0),  # tau ~ m L^2
    },
    "biology": {
        "body_length": (0.9, 0.9),
        "mass": (2.4, 3.0),
        "velocity": (0.25, 0.25),
        "torque": (3.0, 3.0),
    },
    "robotics": {
        "body_length": (0.8, 0.8),
        "mass": (2.0, 2.0),
        "velocity": (0.5, 0.5),
        "torque_rel_mass": (1.0, 1.0),  # tau ~ m L
    },
}


def reference_interval(quantity: str, basis: str, mass_exponent: Optional[float] = None) -> tuple[float, float]:
    """Reference exponent interval for a quantity vs leg length.

    Torque laws stated relative to mass use mass_exponent when given,
    otherwise the basis's own mass law.
    """
    if quantity not in QUANTITIES:
        raise ValueError(f"unknown quantity {quantity!r}")
    if basis not in BASES:
        raise ValueError(f"unknown basis {basis!r}")
    table = _REFERENCE_TABLE[basis]
    if quantity != "torque":
        return table[quantity]
    if "torque" in table:
        return table["torque"]
    rel_lo, rel_hi = table["torque_rel_mass"]
    if mass_exponent is None:
        m_lo, m_hi = table["mass"]
    else:
        m_lo = m_hi = mass_exponent
    return (rel_lo + m_lo, rel_hi + m_hi)


@dataclass(frozen=True)
class ReferenceComparison:
    quantity: str
    basis: str
    fit_exponent: float
    reference_lo: float
    reference_hi: float
    deviation: float  # 0 inside the interval, signed distance otherwise

    def __str__(self):
        if self.reference_lo == self.reference_hi:
            ref = f"{self.reference_lo:g}"
        else:
            ref = f"[{self.reference_lo:g}, {self.reference_hi:g}]"
        return (
            f"{self.quantity} vs {self.basis}: fitted L^{self.fit_exponent:.3g} "
            f"against L^{ref}, deviation {self.deviation:+.3g}"
        )


def compare_to_reference(
    fit: PowerLawFit, quantity: str, basis: str, mass_exponent: Optional[float] = None
) -> ReferenceComparison:
    lo, hi = reference_interval(quantity, basis, mass_exponent)
    b = fit.exponent
    if b < lo:
        dev = b - lo
    elif b > hi:
        dev = b - hi
    else:
        dev = 0.0
    return ReferenceComparison(
        quantity=quantity, basis=basis, fit_exponent=b, reference_lo=lo, reference_hi=hi, deviation=dev
    )


def regressions_markdown(table: dict[str, dict[str, PowerLawFit]]) -> str:
    """Render a survey-regression table as Markdown."""
    headers = {
        "body_length_vs_leg": "L_B vs L",
        "mass_vs_leg": "m vs L",
        "mass_vs_body": "m vs L_B",
    }
    lines = ["| group | n | " + " | ".join(headers.values()) + " |"]
    lines.append("|" + "---|" * (2 + len(headers)))
    for group in (*MORPHOLOGIES, GLOBAL_GROUP):
        fits = table.get(group)
        if not fits:
            continue
        n = next(iter(fits.values())).n
        cells = []
        for rel in RELATIONS:
            f = fits[rel]
            cells.append(f"{f.coefficient:.3g} x^{f.exponent:.2f} (R2={f.r_squared:.3f})")
        lines.append(f"| {group} | {n} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"
