"""Scaling studies: size sweeps, minimum-torque search, foot-shape sweeps.

Three study protocols built on top of run_trial:

* scale_sweep: rescale a stock design across leg lengths under a mass law
  (m proportional to L^2 or L^3), keep the drive dynamically similar
  (f proportional to 1/sqrt(L), torque gains proportional to m*L), run each
  size, and collect the per-trial gait metrics.
* min_torque_search: bisect on the drive torque amplitude for the smallest
  value that still yields consistent walking.
* foot_sweep: stretch the foot ellipsoid along each axis (0.5x to 2.0x) and
  map which shapes still walk, plus where velocity peaks.

Trials inside a sweep are independent; `workers` > 1 fans them out over
processes and results always come back in plan order.
"""

from __future__ import annotations

import itertools
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .allometry import PowerLawFit, fit_power_law
from .contact import ContactParams, default_contact_params, scale_contact_params
from .control import scale_controller, torque_amplitude, with_torque_amplitude
from .metrics import TrialResult, froude, mean_velocity, result_from_trial
from .model import (
    DesignError,
    FootGeometry,
    ScalingLaw,
    WalkerDesign,
    builtin_design,
    scale_design,
)
from .simulate import TrialConfig, run_trial

DEFAULT_SCALES = (0.02, 0.025, 0.05, 0.1, 0.153, 0.3, 0.5, 1.0, 1.2)
FOOT_SWEEP_SCALES = (0.025, 0.153, 1.0)
DEFAULT_TORQUE_MARGIN = 1.5

# Walking means going somewhere: a trial can settle into a perfectly
# period-locked rocking cycle with no net progress, which must not count.
# The floor is a Froude number so it means the same thing at every scale.
MIN_WALKING_FROUDE = 0.01


class BracketError(RuntimeError):
    """Raised when no torque bracket [unstable, stable] can be established."""


def _positive_floats(values, lo, hi, what):
    out = tuple(float(v) for v in values)
    if not out:
        raise ValueError(f"{what} must be non-empty")
    for v in out:
        if not lo <= v <= hi:
            raise ValueError(f"{what} entry {v} outside [{lo}, {hi}]")
    return out


@dataclass(frozen=True)
class SweepPlan:
    """One size-scaling study: a base robot swept over leg lengths."""

    base_name: str
    scales: Sequence[float] = DEFAULT_SCALES
    mass_exponents: Sequence[float] = (2.0, 3.0)
    duration: float = 25.0
    settle_time: float = 2.0
    perturbation: float = 0.02
    torque_mode: str = "scaled_base"  # or "min_search"
    torque_margin: float = DEFAULT_TORQUE_MARGIN
    output_path: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "scales", _positive_floats(self.scales, 0.02, 1.2, "scales"))
        object.__setattr__(self, "mass_exponents", tuple(float(k) for k in self.mass_exponents))
        if not self.mass_exponents:
            raise ValueError("mass_exponents must be non-empty")
        if self.torque_mode not in ("scaled_base", "min_search"):
            raise ValueError(f"unknown torque_mode {self.torque_mode!r}")
        if self.torque_margin < 1.0:
            raise ValueError("torque_margin below 1 would run under the minimum")


@dataclass(frozen=True)
class FootSweepPlan:
    """Per-axis foot stretching study."""

    base_name: str
    multipliers: Sequence[float] = tuple(np.round(np.arange(0.5, 2.0 + 1e-9, 0.1), 10))
    scales: Sequence[float] = FOOT_SWEEP_SCALES
    mass_exponent: float = 2.0
    duration: float = 25.0
    settle_time: float = 2.0
    perturbation: float = 0.02
    full_grid: bool = False
    output_path: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(
            self, "multipliers", _positive_floats(self.multipliers, 0.5, 2.0, "multipliers")
        )
        object.__setattr__(self, "scales", _positive_floats(self.scales, 0.02, 1.2, "scales"))

    def cells(self) -> list[tuple[float, float, float]]:
        """Multiplier tuples in deterministic plan order."""
        m = self.multipliers
        if self.full_grid:
            return list(itertools.product(m, m, m))
        out = []
        seen = set()
        for axis in range(3):
            for v in m:
                tup = tuple(v if i == axis else 1.0 for i in range(3))
                if tup not in seen:
                    seen.add(tup)
                    out.append(tup)
        return out


# ---------------------------------------------------------------------------
# scaling one design + its drive + its contact


def scaled_variant(
    base: WalkerDesign,
    target_leg_length: float,
    mass_exponent: float,
    torque_scale: Optional[float] = None,
    base_contact: Optional[ContactParams] = None,
) -> tuple[WalkerDesign, ContactParams]:
    """Build the (design, contact) pair for one point of a size sweep.

    torque_scale defaults to s**(k+1), the m*L ratio, which keeps the drive
    dynamically similar to the base.  Pass an explicit value when the torque
    comes from a minimum-torque search instead.
    """
    law = ScalingLaw(mass_exponent=mass_exponent)
    s = target_leg_length / base.leg_length
    if torque_scale is None:
        torque_scale = s ** (mass_exponent + 1.0)
    design = scale_design(base, target_leg_length, law)
    design = replace(
        design, controller=scale_controller(base.controller, s, law, torque_scale=torque_scale)
    )
    if base_contact is None:
        base_contact = default_contact_params(base)
    contact = scale_contact_params(base_contact, base, design)
    return design, contact


def _run_cell(args):
    design, contact, duration, settle, perturbation, mass_exponent, tau_min = args
    cfg = TrialConfig(
        design=design,
        contact=contact,
        duration=duration,
        settle_time=settle,
        initial_perturbation=perturbation,
    )
    traj, verdict = run_trial(cfg)
    return result_from_trial(design, mass_exponent, traj, verdict, min_required_torque=tau_min)


def _map_ordered(fn, jobs, workers):
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def scale_sweep(plan: SweepPlan, workers: int = 1) -> list[TrialResult]:
    """Run the size sweep and collect one TrialResult per (mass law, scale)."""
    base = builtin_design(plan.base_name)
    base_contact = default_contact_params(base)
    jobs = []
    for k in plan.mass_exponents:
        for L in plan.scales:
            tau_min = None
            torque_scale = None
            if plan.torque_mode == "min_search":
                design_k, contact_k = scaled_variant(base, L, k, base_contact=base_contact)
                tau_min = min_torque_search(design_k, contact_k)
                torque_scale = (
                    plan.torque_margin * tau_min / torque_amplitude(base.controller)
                )
            design, contact = scaled_variant(
                base, L, k, torque_scale=torque_scale, base_contact=base_contact
            )
            jobs.append(
                (design, contact, plan.duration, plan.settle_time, plan.perturbation, k, tau_min)
            )
    return _map_ordered(_run_cell, jobs, workers)


# ---------------------------------------------------------------------------
# minimum-torque bisection


def walking_predicate(
    design: WalkerDesign,
    contact: Optional[ContactParams] = None,
    duration: float = 25.0,
    perturbation: float = 0.02,
    froude_floor: float = MIN_WALKING_FROUDE,
) -> bool:
    """True when the trial converges to a limit cycle that actually travels."""
    cfg = TrialConfig(
        design=design, contact=contact, duration=duration, initial_perturbation=perturbation
    )
    traj, verdict = run_trial(cfg)
    if not verdict.stable:
        return False
    try:
        v = mean_velocity(traj, t_start=verdict.convergence_time)
    except ValueError:
        return False
    return froude(v, design.leg_length, design.gravity) >= froude_floor


def min_torque_search(
    design: WalkerDesign,
    contact: Optional[ContactParams] = None,
    bracket: tuple[float, float] = (0.0, 0.0),
    rel_tol: float = 0.05,
    predicate: Optional[Callable[[WalkerDesign], bool]] = None,
    max_expansions: int = 8,
) -> float:
    """Smallest drive torque amplitude that still produces consistent walking.

    Bisects on the controller's torque knob (saturation limit for the
    position drive, pulse torque for bang-bang).  The default bracket is
    (0, current amplitude]; amplitude 0 counts as not-walking without
    running a trial.  When the upper end is not stable it is doubled, up to
    max_expansions times, before giving up.
    """
    if predicate is None:
        predicate = lambda d: walking_predicate(d, contact)
    if not 0.0 < rel_tol < 1.0:
        raise ValueError("rel_tol must lie in (0, 1)")

    def stable_at(tau: float) -> bool:
        if tau <= 0.0:
            return False
        return predicate(replace(design, controller=with_torque_amplitude(design.controller, tau)))

    lo, hi = (float(b) for b in bracket)
    if hi <= 0.0:
        hi = torque_amplitude(design.controller)
    if lo < 0.0:
        raise ValueError("bracket lower bound must be non-negative")
    if lo >= hi:
        raise ValueError("bracket must satisfy lo < hi")

    expansions = 0
    while not stable_at(hi):
        if expansions >= max_expansions:
            raise BracketError("design does not walk at any tested torque")
        hi *= 2.0
        lo = max(lo, hi / 2.0)  # the failed upper bound is the new floor
        expansions += 1
    while lo > 0.0 and stable_at(lo):
        hi = lo
        lo /= 2.0
        expansions += 1
        if expansions > max_expansions:
            # walks even at vanishing torque; report the last stable point
            return hi

    while (hi - lo) > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if stable_at(mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# foot sweep


@dataclass(frozen=True)
class FootCell:
    """One point of the foot-shape map."""

    multipliers: tuple[float, float, float]
    scale: float
    result: TrialResult

    @property
    def feasible(self) -> bool:
        return self.result.verdict.stable

    @property
    def velocity(self) -> float:
        return self.result.velocity


def stretched_feet(design: WalkerDesign, multipliers) -> WalkerDesign:
    """Scale both foot ellipsoids per axis, keeping the sole on the ground.

    The foot centre rides up or down with the Z semi-axis so the lowest
    point of a plumb leg stays exactly at ground level; X and Y placement
    are unchanged.
    """
    mx, my, mz = (float(m) for m in multipliers)
    if min(mx, my, mz) <= 0.0:
        raise DesignError("foot multipliers must be positive")

    def stretch(foot: FootGeometry) -> FootGeometry:
        cx, cy, _ = foot.center_offset
        new_az = foot.semi_axis_z * mz
        return FootGeometry(
            foot.semi_axis_x * mx,
            foot.semi_axis_y * my,
            new_az,
            (cx, cy, new_az - design.leg_length),
        )

    return replace(design, foot_left=stretch(design.foot_left), foot_right=stretch(design.foot_right))


def foot_sweep(plan: FootSweepPlan, workers: int = 1) -> list[FootCell]:
    """Map foot-shape feasibility for each (scale, multiplier tuple)."""
    base = builtin_design(plan.base_name)
    base_contact = default_contact_params(base)
    cells = plan.cells()
    jobs = []
    keys = []
    for L in plan.scales:
        design, contact = scaled_variant(base, L, plan.mass_exponent, base_contact=base_contact)
        for mult in cells:
            variant = stretched_feet(design, mult)
            jobs.append(
                (
                    variant,
                    contact,
                    plan.duration,
                    plan.settle_time,
                    plan.perturbation,
                    plan.mass_exponent,
                    None,
                )
            )
            keys.append((mult, L))
    results = _map_ordered(_run_cell, jobs, workers)
    return [
        FootCell(multipliers=mult, scale=L, result=res)
        for (mult, L), res in zip(keys, results)
    ]


def feasible_boundary_fits(
    cells: Sequence[FootCell], base: WalkerDesign
) -> dict[str, PowerLawFit]:
    """Fit the largest feasible foot semi-axis against leg length, per axis.

    Uses the single-axis slices of the map (the other two multipliers at 1)
    and takes the biggest multiplier that still walks at each scale; the
    regression then runs on the corresponding physical semi-axis length.
    """
    semi_base = base.foot_left.semi_axes
    fits = {}
    for axis, name in enumerate("xyz"):
        pts = []
        for L in sorted({c.scale for c in cells}):
            best = None
            for c in cells:
                if c.scale != L or not c.feasible:
                    continue
                others = [c.multipliers[i] for i in range(3) if i != axis]
                if any(abs(o - 1.0) > 1e-9 for o in others):
                    continue
                if best is None or c.multipliers[axis] > best:
                    best = c.multipliers[axis]
            if best is not None:
                s = L / base.leg_length
                pts.append((L, best * semi_base[axis] * s))
        if len(pts) >= 2:
            fits[name] = fit_power_law(pts)
        else:
            warnings.warn(f"axis {name}: fewer than two scales with a feasible cell")
    return fits


def optimal_foot_report(cells: Sequence[FootCell]) -> list[dict]:
    """Per-scale fastest feasible foot plus Froude-anchored velocity ratios.

    Ties on velocity break lexicographically on the multiplier tuple.  The
    Froude columns compare each scale against the largest scale present:
    dynamic similarity predicts v2/v1 = sqrt(L2/L1).
    """
    rows = []
    scales = sorted({c.scale for c in cells})
    best_at = {}
    for L in scales:
        feasible = [c for c in cells if c.scale == L and c.feasible and np.isfinite(c.velocity)]
        if not feasible:
            rows.append(dict(scale=L, feasible_cells=0))
            continue
        best = min(feasible, key=lambda c: (-c.velocity, c.multipliers))
        best_at[L] = best
        ax = best.multipliers
        rows.append(
            dict(
                scale=L,
                feasible_cells=len(feasible),
                multipliers=ax,
                peak_velocity=best.velocity,
                aspect_yx=ax[1] / ax[0],
                aspect_zx=ax[2] / ax[0],
                aspect_zy=ax[2] / ax[1],
            )
        )
    if best_at:
        l_ref = max(best_at)
        v_ref = best_at[l_ref].velocity
        for row in rows:
            L = row["scale"]
            if L in best_at and L != l_ref:
                predicted = math.sqrt(l_ref / L)
                observed = v_ref / best_at[L].velocity
                row["froude_predicted_ratio"] = predicted
                row["froude_observed_ratio"] = observed
                row["froude_deviation_pct"] = 100.0 * (observed - predicted) / predicted
    return rows


# ---------------------------------------------------------------------------
# exponent summaries over sweep results


def _fit_metric(results: Sequence[TrialResult], getter, what) -> PowerLawFit:
    pts = [
        (r.leg_length, getter(r))
        for r in results
        if r.verdict.stable and getter(r) is not None and np.isfinite(getter(r)) and getter(r) > 0
    ]
    if len(pts) < 2:
        raise ValueError(f"fewer than two stable trials with {what}; cannot fit")
    return fit_power_law(pts)


def velocity_fit(results: Sequence[TrialResult]) -> PowerLawFit:
    """Velocity-vs-leg-length power law over the stable trials."""
    return _fit_metric(results, lambda r: r.velocity, "velocity")


def min_torque_fit(results: Sequence[TrialResult]) -> PowerLawFit:
    """Minimum-torque-vs-leg-length power law over the stable trials."""
    return _fit_metric(results, lambda r: r.min_required_torque, "min_required_torque")


def attitude_summary(results: Sequence[TrialResult]) -> dict[str, tuple[float, float]]:
    """Mean and spread of the attitude amplitudes across stable trials."""
    out = {}
    for key in ("theta_r", "theta_p", "theta_y"):
        vals = [getattr(r, key)[0] for r in results if r.verdict.stable]
        vals = [v for v in vals if np.isfinite(v)]
        if vals:
            arr = np.asarray(vals)
            out[key] = (float(arr.mean()), float(arr.std()))
    return out
