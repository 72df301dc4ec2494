"""Command-line entry point: config-driven trials, sweeps, and reports.

Every command reads a flat key=value config (see config.py), writes its
artifacts into --out, and drops a manifest.json recording the resolved
parameters and a sha256 of every output file.  Identical configs produce
identical artifact hashes; --workers only changes wall time.

Exit codes: 0 success, 1 config or usage error, 2 simulation failure
(diverged trial, or a design that does not walk at any tested torque),
3 a --check comparison fell outside its tolerance band.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__, allometry, experiments, metrics
from .config import (
    ConfigError,
    foot_plan_from,
    get_float,
    get_float_list,
    get_str,
    load_config,
    sweep_plan_from,
    trial_config_from,
)
from .contact import default_contact_params
from .experiments import BracketError, scaled_variant
from .model import DesignError, builtin_design
from .simulate import OUTCOME_DIVERGED, run_trial

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SIM = 2
EXIT_CHECK = 3

# --check tolerance bands for the fitted exponents
VELOCITY_EXPONENT_BAND = (0.40, 0.60)
TORQUE_EXPONENT_BAND = {2.0: (2.5, 3.7), 3.0: (3.6, 4.3)}
FOOT_EXPONENT_BAND = (0.85, 1.15)
MIN_R_SQUARED = 0.95


@dataclass
class RunManifest:
    """What ran and what it produced, for reproducibility audits."""

    command: str
    config_path: str
    parameters: dict
    outputs: dict = field(default_factory=dict)
    wall_time_s: float = 0.0
    engine_version: str = __version__

    def add_output(self, path) -> None:
        digest = hashlib.sha256()
        with open(path, "rb") as fh:
            for chunk in iter(lambda: fh.read(65536), b""):
                digest.update(chunk)
        self.outputs[str(path)] = digest.hexdigest()

    def write(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=1, sort_keys=True)
            fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and math.isnan(obj):
        return None
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _dump_json(payload, path) -> None:
    def clean(x):
        if isinstance(x, float) and math.isnan(x):
            return None
        if isinstance(x, dict):
            return {k: clean(v) for k, v in x.items()}
        if isinstance(x, (list, tuple)):
            return [clean(v) for v in x]
        return x

    with open(path, "w") as fh:
        json.dump(clean(payload), fh, indent=1, sort_keys=True, default=_json_default)
        fh.write("\n")


def _fit_record(fit) -> dict:
    return dict(coefficient=fit.coefficient, exponent=fit.exponent, r_squared=fit.r_squared, n=fit.n)


# ---------------------------------------------------------------------------
# tiny deterministic SVG scatter (log-log), so reports carry a picture
# without a plotting dependency


def _svg_scatter(path, points, title, xlabel, ylabel, fit=None) -> None:
    pts = [(x, y) for x, y in points if x > 0 and y > 0 and np.isfinite(x) and np.isfinite(y)]
    width, height, margin = 480, 360, 54
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="{width / 2:.0f}" y="{height - 8:.0f}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="14" y="{height / 2:.0f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {height / 2:.0f})">{ylabel}</text>',
    ]
    if pts:
        lx = [math.log10(x) for x, _ in pts]
        ly = [math.log10(y) for _, y in pts]
        x0, x1 = min(lx), max(lx)
        y0, y1 = min(ly), max(ly)
        x0, x1 = (x0 - 0.5, x1 + 0.5) if x0 == x1 else (x0, x1)
        y0, y1 = (y0 - 0.5, y1 + 0.5) if y0 == y1 else (y0, y1)

        def to_px(xl, yl):
            px = margin + (xl - x0) / (x1 - x0) * (width - 2 * margin)
            py = height - margin - (yl - y0) / (y1 - y0) * (height - 2 * margin)
            return px, py

        parts.append(
            f'<rect x="{margin}" y="{margin}" width="{width - 2 * margin}" '
            f'height="{height - 2 * margin}" fill="none" stroke="black"/>'
        )
        if fit is not None:
            xa, ya = to_px(x0, math.log10(fit.coefficient) + fit.exponent * x0)
            xb, yb = to_px(x1, math.log10(fit.coefficient) + fit.exponent * x1)
            parts.append(
                f'<line x1="{xa:.1f}" y1="{ya:.1f}" x2="{xb:.1f}" y2="{yb:.1f}" '
                f'stroke="#808080" stroke-dasharray="4 3"/>'
            )
            parts.append(
                f'<text x="{width - margin:.0f}" y="{margin - 6:.0f}" text-anchor="end" '
                f'font-size="11">y = {fit.coefficient:.3g} x^{fit.exponent:.3f} '
                f"(R&#178;={fit.r_squared:.3f})</text>"
            )
        for xl, yl in zip(lx, ly):
            px, py = to_px(xl, yl)
            parts.append(f'<circle cx="{px:.1f}" cy="{py:.1f}" r="3.5" fill="#1f6fb2"/>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


# ---------------------------------------------------------------------------
# commands


def cmd_trial(args) -> int:
    cfg = load_config(args.config)
    trial, _ = trial_config_from(cfg)
    if args.seed is not None:
        from dataclasses import replace

        trial = replace(trial, seed=args.seed)
    manifest = RunManifest("trial", str(args.config), dict(cfg))
    t0 = time.perf_counter()
    traj, verdict = run_trial(trial)
    result = metrics.result_from_trial(trial.design, math.nan, traj, verdict)
    out = args.out
    traj_path = out / "trajectory.csv"
    traj.to_csv(traj_path)
    result_path = out / "result.json"
    with open(result_path, "w") as fh:
        fh.write(result.to_json() + "\n")
    manifest.add_output(traj_path)
    manifest.add_output(result_path)
    manifest.wall_time_s = time.perf_counter() - t0
    manifest.write(out / "manifest.json")
    print(
        f"{trial.design.name}: {verdict.outcome}"
        + (f", v = {result.velocity:.3f} m/s" if verdict.stable else "")
    )
    return EXIT_SIM if verdict.outcome == OUTCOME_DIVERGED else EXIT_OK


def _check_velocity_fits(fits) -> list[str]:
    problems = []
    lo, hi = VELOCITY_EXPONENT_BAND
    for k, fit in fits.items():
        if not lo <= fit.exponent <= hi:
            problems.append(f"velocity exponent {fit.exponent:.3f} (m~L^{k:g}) outside [{lo}, {hi}]")
        if fit.r_squared < MIN_R_SQUARED:
            problems.append(f"velocity fit R2 {fit.r_squared:.3f} (m~L^{k:g}) below {MIN_R_SQUARED}")
    if len(fits) >= 2:
        exps = [f.exponent for f in fits.values()]
        if max(exps) - min(exps) >= 0.05:
            problems.append(f"velocity exponents differ by {max(exps) - min(exps):.3f} >= 0.05")
    return problems


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    plan = sweep_plan_from(cfg)
    manifest = RunManifest("sweep", str(args.config), dict(cfg))
    t0 = time.perf_counter()
    results = experiments.scale_sweep(plan, workers=args.workers)
    out = args.out
    csv_path = out / "sweep_results.csv"
    metrics.results_to_csv(results, csv_path)
    manifest.add_output(csv_path)

    fits = {}
    summary = dict(design=plan.base_name, trials=len(results), fits={})
    for k in plan.mass_exponents:
        sub = [r for r in results if r.mass_exponent == k]
        try:
            fit = experiments.velocity_fit(sub)
        except ValueError as exc:
            summary["fits"][f"velocity_mass_L{k:g}"] = dict(error=str(exc))
            continue
        fits[k] = fit
        summary["fits"][f"velocity_mass_L{k:g}"] = _fit_record(fit)
        if plan.torque_mode == "min_search":
            try:
                summary["fits"][f"min_torque_mass_L{k:g}"] = _fit_record(
                    experiments.min_torque_fit(sub)
                )
            except ValueError as exc:
                summary["fits"][f"min_torque_mass_L{k:g}"] = dict(error=str(exc))
    summary["attitude"] = experiments.attitude_summary(results)

    json_path = out / "sweep_summary.json"
    _dump_json(summary, json_path)
    manifest.add_output(json_path)
    stable = [r for r in results if r.verdict.stable]
    svg_path = out / "velocity_vs_length.svg"
    fit0 = next(iter(fits.values()), None)
    _svg_scatter(
        svg_path,
        [(r.leg_length, r.velocity) for r in stable],
        f"{plan.base_name}: walking speed vs leg length",
        "leg length [m]",
        "velocity [m/s]",
        fit=fit0,
    )
    manifest.add_output(svg_path)
    manifest.wall_time_s = time.perf_counter() - t0
    manifest.write(out / "manifest.json")

    for k, fit in fits.items():
        print(f"m ~ L^{k:g}: v ~ L^{fit.exponent:.3f} (R2={fit.r_squared:.3f}, n={fit.n})")
    print(f"{len(stable)}/{len(results)} trials stable; results in {csv_path}")
    if args.check:
        problems = _check_velocity_fits(fits)
        if not fits:
            problems.append("no velocity fit could be made")
        for p in problems:
            print(f"CHECK FAIL: {p}", file=sys.stderr)
        if problems:
            return EXIT_CHECK
        print("checks passed")
    return EXIT_OK


def cmd_footsweep(args) -> int:
    cfg = load_config(args.config)
    plan = foot_plan_from(cfg, full_grid=True if args.full_grid else None)
    manifest = RunManifest("footsweep", str(args.config), dict(cfg))
    t0 = time.perf_counter()
    cells = experiments.foot_sweep(plan, workers=args.workers)
    out = args.out
    csv_path = out / "foot_cells.csv"
    with open(csv_path, "w") as fh:
        fh.write("mult_x,mult_y,mult_z,scale,outcome,velocity\n")
        for c in cells:
            vel = "" if not np.isfinite(c.result.velocity) else f"{c.result.velocity:.17g}"
            fh.write(
                f"{c.multipliers[0]:g},{c.multipliers[1]:g},{c.multipliers[2]:g},"
                f"{c.scale:g},{c.result.verdict.outcome},{vel}\n"
            )
    manifest.add_output(csv_path)

    base = builtin_design(plan.base_name)
    fits = experiments.feasible_boundary_fits(cells, base)
    report = experiments.optimal_foot_report(cells)
    summary = dict(
        design=plan.base_name,
        cells=len(cells),
        boundary_fits={ax: _fit_record(f) for ax, f in fits.items()},
        optimal=report,
    )
    json_path = out / "foot_summary.json"
    _dump_json(summary, json_path)
    manifest.add_output(json_path)
    manifest.wall_time_s = time.perf_counter() - t0
    manifest.write(out / "manifest.json")

    for ax, fit in fits.items():
        print(f"{ax}: boundary ~ {fit.coefficient:.3g} L^{fit.exponent:.3f} (R2={fit.r_squared:.3f})")
    if args.check:
        problems = []
        lo, hi = FOOT_EXPONENT_BAND
        for ax in "xyz":
            if ax not in fits:
                problems.append(f"axis {ax}: no boundary fit")
            elif not lo <= fits[ax].exponent <= hi:
                problems.append(f"axis {ax}: exponent {fits[ax].exponent:.3f} outside [{lo}, {hi}]")
        for p in problems:
            print(f"CHECK FAIL: {p}", file=sys.stderr)
        if problems:
            return EXIT_CHECK
        print("checks passed")
    return EXIT_OK


def cmd_mintorque(args) -> int:
    cfg = load_config(args.config)
    name = get_str(cfg, "design")
    if name is None:
        raise ConfigError("config is missing the 'design' key")
    base = builtin_design(name)
    scales = get_float_list(cfg, "mintorque.scales", (base.leg_length,))
    mass_exponent = get_float(cfg, "mass_exponent", 2.0)
    rel_tol = get_float(cfg, "mintorque.rel_tol", 0.05)
    froude_floor = get_float(cfg, "mintorque.froude_floor", experiments.MIN_WALKING_FROUDE)
    manifest = RunManifest("mintorque", str(args.config), dict(cfg))
    t0 = time.perf_counter()
    rows = []
    for L in scales:
        design, contact = scaled_variant(base, L, mass_exponent)
        try:
            tau = experiments.min_torque_search(
                design,
                contact,
                rel_tol=rel_tol,
                predicate=lambda d: experiments.walking_predicate(
                    d, contact, froude_floor=froude_floor
                ),
            )
        except BracketError as exc:
            print(f"L={L:g}: {exc}", file=sys.stderr)
            return EXIT_SIM
        rows.append((L, design.total_mass, tau))
        print(f"L={L:g}: tau_min = {tau:.6g} N*m", flush=True)
    out = args.out
    csv_path = out / "min_torque.csv"
    with open(csv_path, "w") as fh:
        fh.write("leg_length,mass,min_torque\n")
        for L, m, tau in rows:
            fh.write(f"{L:.17g},{m:.17g},{tau:.17g}\n")
    manifest.add_output(csv_path)
    summary = dict(design=name, mass_exponent=mass_exponent, rows=len(rows))
    fit = None
    if len(rows) >= 2:
        fit = allometry.fit_power_law([(L, tau) for L, _, tau in rows])
        summary["torque_fit"] = _fit_record(fit)
        print(f"tau_min ~ {fit.coefficient:.3g} L^{fit.exponent:.3f} (R2={fit.r_squared:.3f})")
    json_path = out / "min_torque_summary.json"
    _dump_json(summary, json_path)
    manifest.add_output(json_path)
    svg_path = out / "min_torque_vs_length.svg"
    _svg_scatter(
        svg_path,
        [(L, tau) for L, _, tau in rows],
        f"{name}: minimum drive torque vs leg length",
        "leg length [m]",
        "torque [N m]",
        fit=fit,
    )
    manifest.add_output(svg_path)
    manifest.wall_time_s = time.perf_counter() - t0
    manifest.write(out / "manifest.json")
    if args.check and fit is not None:
        band = TORQUE_EXPONENT_BAND.get(mass_exponent)
        problems = []
        if band and not band[0] <= fit.exponent <= band[1]:
            problems.append(f"torque exponent {fit.exponent:.3f} outside {band}")
        if fit.r_squared < MIN_R_SQUARED:
            problems.append(f"torque fit R2 {fit.r_squared:.3f} below {MIN_R_SQUARED}")
        for p in problems:
            print(f"CHECK FAIL: {p}", file=sys.stderr)
        if problems:
            return EXIT_CHECK
        print("checks passed")
    return EXIT_OK


def cmd_survey(args) -> int:
    csv_in = args.csv
    if csv_in is None:
        cfg = load_config(args.config) if args.config else {}
        csv_in = get_str(cfg, "survey.csv")
        if csv_in is None:
            raise ConfigError("survey needs a CSV path (positional argument or survey.csv key)")
    manifest = RunManifest("survey", str(csv_in), {})
    t0 = time.perf_counter()
    records = allometry.load_survey(csv_in)
    table = allometry.survey_regressions(records)
    out = args.out
    md_path = out / "survey_report.md"
    with open(md_path, "w") as fh:
        fh.write(allometry.regressions_markdown(table))
    manifest.add_output(md_path)
    csv_path = out / "survey_regressions.csv"
    with open(csv_path, "w") as fh:
        fh.write("group,relation,coefficient,exponent,r_squared,n\n")
        for group, rels in table.items():
            for rel, fit in rels.items():
                fh.write(
                    f"{group},{rel},{fit.coefficient:.17g},{fit.exponent:.17g},"
                    f"{fit.r_squared:.17g},{fit.n}\n"
                )
    manifest.add_output(csv_path)
    manifest.wall_time_s = time.perf_counter() - t0
    manifest.write(out / "manifest.json")
    print(f"{len(records)} records, {sum(len(v) for v in table.values())} fits -> {md_path}")
    return EXIT_OK


def cmd_report(args) -> int:
    """Consolidate artifacts already present in --out into one Markdown page."""
    out = args.out
    manifest = RunManifest("report", str(out), {})
    t0 = time.perf_counter()
    sections = ["# Scaling study report", ""]
    sweep_json = out / "sweep_summary.json"
    if sweep_json.exists():
        with open(sweep_json) as fh:
            summary = json.load(fh)
        sections.append(f"## Scale sweep: {summary.get('design', '?')}")
        for key, rec in sorted(summary.get("fits", {}).items()):
            if "exponent" in rec:
                sections.append(
                    f"- {key}: y = {rec['coefficient']:.3g} L^{rec['exponent']:.3f}"
                    f" (R2 = {rec['r_squared']:.4f}, n = {rec['n']})"
                )
        att = summary.get("attitude") or {}
        label = {"theta_r": "roll", "theta_p": "pitch", "theta_y": "yaw"}
        for key, pair in att.items():
            if pair:
                sections.append(
                    f"- {label.get(key, key)} amplitude: {pair[0]:.2f} deg"
                    f" (spread {pair[1]:.2f} across scales)"
                )
        sections.append("")
    foot_json = out / "foot_summary.json"
    if foot_json.exists():
        with open(foot_json) as fh:
            summary = json.load(fh)
        sections.append(f"## Foot sweep: {summary.get('design', '?')}")
        for ax, rec in sorted((summary.get("boundary_fits") or {}).items()):
            sections.append(
                f"- feasible {ax} semi-axis ~ {rec['coefficient']:.3g} L^{rec['exponent']:.3f}"
                f" (R2 = {rec['r_squared']:.4f})"
            )
        for row in summary.get("optimal") or []:
            if "peak_velocity" in row:
                line = (
                    f"- L = {row['scale']:g} m: peak v = {row['peak_velocity']:.3f} m/s at"
                    f" multipliers {tuple(row['multipliers'])}"
                )
                if "froude_predicted_ratio" in row:
                    line += (
                        f"; speed ratio to largest scale {row['froude_observed_ratio']:.2f}"
                        f" vs sqrt-L prediction {row['froude_predicted_ratio']:.2f}"
                        f" ({row['froude_deviation_pct']:+.0f}%)"
                    )
                sections.append(line)
        sections.append("")
    md_survey = out / "survey_report.md"
    if md_survey.exists():
        sections.append((out / "survey_report.md").read_text().strip())
        sections.append("")
    if len(sections) <= 2:
        print(f"nothing to report in {out}", file=sys.stderr)
        return EXIT_CONFIG
    report_path = out / "report.md"
    with open(report_path, "w") as fh:
        fh.write("\n".join(sections))
    manifest.add_output(report_path)
    manifest.wall_time_s = time.perf_counter() - t0
    manifest.write(out / "report_manifest.json")
    print(f"wrote {report_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="walkerscale",
        description="Scaling studies of single-actuator passive-dynamic walkers.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="flat key=value config file")
        else:
            p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--out", default=".", help="output directory (created if missing)")
        p.add_argument("--workers", type=int, default=1, help="parallel trial processes")

    p = sub.add_parser("trial", help="run one walking trial")
    common(p)
    p.add_argument("--seed", type=int, help="attitude-jitter seed override")
    p.set_defaults(fn=cmd_trial)

    p = sub.add_parser("sweep", help="leg-length scale sweep")
    common(p)
    p.add_argument("--check", action="store_true", help="fail if fitted exponents leave tolerance")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("footsweep", help="foot-shape feasibility sweep")
    common(p)
    p.add_argument("--check", action="store_true", help="fail if boundary exponents leave tolerance")
    p.add_argument("--full-grid", action="store_true", help="all multiplier triples, not axis slices")
    p.set_defaults(fn=cmd_footsweep)

    p = sub.add_parser("mintorque", help="bisect for the minimum walking torque")
    common(p)
    p.add_argument("--check", action="store_true", help="fail if the torque exponent leaves tolerance")
    p.set_defaults(fn=cmd_mintorque)

    p = sub.add_parser("survey", help="robot-survey power-law regressions")
    p.add_argument("csv", nargs="?", help="survey CSV path")
    common(p, needs_config=False)
    p.set_defaults(fn=cmd_survey)

    p = sub.add_parser("report", help="consolidate artifacts in --out into Markdown")
    common(p, needs_config=False)
    p.set_defaults(fn=cmd_report)

    return parser


def main(argv=None) -> int:
    from pathlib import Path

    parser = build_parser()
    args = parser.parse_args(argv)
    args.out = Path(args.out)
    try:
        args.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"cannot create output directory: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.fn(args)
    except (ConfigError, DesignError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except allometry.SurveyFormatError as exc:
        print(f"survey error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
