"""Flat key=value config files and their mapping onto runnable objects.

Format: one `key = value` per line, `#` starts a comment, blank lines
ignored, keys are dotted lowercase paths.  Values stay strings until a
typed getter pulls them out, so unknown keys can be rejected with a line
number and a clear message instead of a stack trace.

Recognized keys (all optional unless a command says otherwise):

    design                  builtin name: mugatu, zippy_ellipsoidal, zippy_spherical
    scale                   target leg length in m (rescales the builtin)
    mass_exponent           2 or 3 (any real accepted)
    duration, settle_time   s
    perturbation            initial roll offset, rad
    seed                    integer attitude-jitter seed
    design.<field>          WalkerDesign field override (floats)
    design.foot_semi_x/y/z  foot ellipsoid semi-axes, m (mirrored pair)
    design.foot_lateral     left-foot centre offset from the sagittal plane, m
    controller.<field>      controller field override (floats)
    contact.<field>         ContactParams field override (floats)
    sweep.scales            comma-separated leg lengths, m
    sweep.mass_exponents    comma-separated exponents
    sweep.torque_mode       scaled_base or min_search
    sweep.torque_margin     multiplier on the searched minimum
    foot.multipliers        comma-separated axis multipliers
    foot.scales             comma-separated leg lengths, m
    foot.full_grid          true/false
    mintorque.scales        comma-separated leg lengths, m
    mintorque.rel_tol       bisection relative tolerance
    mintorque.froude_floor  walking speed floor, dimensionless
"""

from __future__ import annotations

from dataclasses import fields, replace
from typing import Optional

from .contact import ContactParams, default_contact_params
from .experiments import FootSweepPlan, SweepPlan, scaled_variant
from .model import BUILTIN_NAMES, WalkerDesign, builtin_design, symmetric_feet
from .simulate import TrialConfig


class ConfigError(ValueError):
    """Malformed config file or invalid parameter value."""


_FOOT_KEYS = (
    "design.foot_semi_x",
    "design.foot_semi_y",
    "design.foot_semi_z",
    "design.foot_lateral",
)


def parse_config(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse flat key=value text into an ordered string dict."""
    out: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{line_no}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{line_no}: empty key")
        if key in out:
            raise ConfigError(f"{source}:{line_no}: duplicate key {key!r}")
        out[key] = value
    return out


def load_config(path) -> dict[str, str]:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, source=str(path))


def _convert(cfg, key, kind, default):
    if key not in cfg:
        return default
    raw = cfg[key]
    try:
        if kind is bool:
            lowered = raw.lower()
            if lowered in ("true", "yes", "1", "on"):
                return True
            if lowered in ("false", "no", "0", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: {exc}") from exc


def get_str(cfg, key, default: Optional[str] = None) -> Optional[str]:
    return _convert(cfg, key, str, default)


def get_float(cfg, key, default: Optional[float] = None) -> Optional[float]:
    return _convert(cfg, key, float, default)


def get_int(cfg, key, default: Optional[int] = None) -> Optional[int]:
    return _convert(cfg, key, int, default)


def get_bool(cfg, key, default: bool = False) -> bool:
    return _convert(cfg, key, bool, default)


def get_float_list(cfg, key, default=None):
    if key not in cfg:
        return default
    parts = [p.strip() for p in cfg[key].split(",") if p.strip()]
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: {exc}") from exc


def _override_dataclass(obj, cfg, prefix, float_fields_only=True):
    """Apply cfg's `prefix.<field>` keys onto a frozen dataclass copy."""
    names = {f.name for f in fields(obj)}
    updates = {}
    for key, raw in cfg.items():
        if not key.startswith(prefix + "."):
            continue
        name = key[len(prefix) + 1:]
        if name not in names:
            raise ConfigError(f"key {key!r}: {type(obj).__name__} has no field {name!r}")
        try:
            updates[name] = float(raw)
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: {exc}") from exc
    if not updates:
        return obj
    try:
        return replace(obj, **updates)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{prefix} overrides rejected: {exc}") from exc


def design_from(cfg) -> tuple[WalkerDesign, Optional[ContactParams], float]:
    """Resolve (design, contact, mass_exponent) from a parsed config.

    The builtin named by `design` is rescaled when `scale` is present
    (carrying the drive and contact along as scaled_variant does), then
    field-level overrides are applied on top.
    """
    name = get_str(cfg, "design")
    if name is None:
        raise ConfigError("config is missing the 'design' key")
    try:
        design = builtin_design(name)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    mass_exponent = get_float(cfg, "mass_exponent", 3.0)
    scale = get_float(cfg, "scale")
    contact: Optional[ContactParams] = None
    if scale is not None and abs(scale - design.leg_length) > 1e-12:
        try:
            design, contact = scaled_variant(design, scale, mass_exponent)
        except ValueError as exc:
            raise ConfigError(f"scale={scale}: {exc}") from exc
    foot_vals = {k: get_float(cfg, k) for k in _FOOT_KEYS if k in cfg}
    scalars = {k: v for k, v in cfg.items() if k not in _FOOT_KEYS}
    design = _override_dataclass(design, scalars, "design")
    if foot_vals:
        ax, ay, az = design.foot_left.semi_axes
        ax = foot_vals.get("design.foot_semi_x", ax)
        ay = foot_vals.get("design.foot_semi_y", ay)
        az = foot_vals.get("design.foot_semi_z", az)
        lateral = foot_vals.get("design.foot_lateral", abs(design.foot_left.center_offset[1]))
        # keep the standing sole on the ground: centre z tracks the z semi-axis
        left, right = symmetric_feet((ax, ay, az), (0.0, lateral, az - design.leg_length))
        try:
            design = replace(design, foot_left=left, foot_right=right)
        except ValueError as exc:
            raise ConfigError(f"foot overrides rejected: {exc}") from exc
    new_ctrl = _override_dataclass(design.controller, cfg, "controller")
    if new_ctrl is not design.controller:
        design = replace(design, controller=new_ctrl)
    if any(k.startswith("contact.") for k in cfg):
        contact = _override_dataclass(
            contact if contact is not None else default_contact_params(design), cfg, "contact"
        )
    return design, contact, mass_exponent


_DESIGN_SCALARS = (
    "leg_length",
    "body_length",
    "total_mass",
    "leg_mass_fraction",
    "leg_com_height_fraction",
    "leg_com_lateral_offset",
    "shaft_width_fraction",
    "foot_shell_mass_fraction",
    "gravity",
)


def design_to_config(design: WalkerDesign, base_name: Optional[str] = None,
                     header: Optional[str] = None) -> str:
    """Serialize a design to flat key=value text that design_from reverses.

    The controller's type is carried by the `design` line (the named builtin
    supplies it), so base_name must be a builtin with the same controller
    class.  Mirrored feet only; a non-zero hip_offset is not expressible.
    """
    name = design.name if base_name is None else base_name
    if name not in BUILTIN_NAMES:
        raise ConfigError(f"base_name {name!r} is not a builtin design")
    if any(abs(v) > 0.0 for v in design.hip_offset):
        raise ConfigError("designs with a non-zero hip_offset cannot be serialized")
    cx, cy, cz = design.foot_left.center_offset
    ax, ay, az = design.foot_left.semi_axes
    if abs(cx) > 0.0 or abs(cz - (az - design.leg_length)) > 1e-12:
        raise ConfigError("only ground-touching, fore-aft centred feet can be serialized")
    lines = []
    if header:
        lines.extend(f"# {part}" if part else "#" for part in header.splitlines())
        lines.append("")
    lines.append(f"design = {name}")
    for field_name in _DESIGN_SCALARS:
        lines.append(f"design.{field_name} = {float(getattr(design, field_name))!r}")
    for key, value in zip(_FOOT_KEYS, (ax, ay, az, abs(cy))):
        lines.append(f"{key} = {float(value)!r}")
    for f in fields(design.controller):
        lines.append(f"controller.{f.name} = {float(getattr(design.controller, f.name))!r}")
    return "\n".join(lines) + "\n"


def trial_config_from(cfg) -> tuple[TrialConfig, float]:
    design, contact, mass_exponent = design_from(cfg)
    try:
        trial = TrialConfig(
            design=design,
            contact=contact,
            duration=get_float(cfg, "duration", 25.0),
            settle_time=get_float(cfg, "settle_time", 2.0),
            initial_perturbation=get_float(cfg, "perturbation", 0.02),
            log_decimation=get_int(cfg, "log_decimation"),
            seed=get_int(cfg, "seed"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return trial, mass_exponent


def sweep_plan_from(cfg) -> SweepPlan:
    name = get_str(cfg, "design")
    if name is None:
        raise ConfigError("config is missing the 'design' key")
    kwargs = dict(base_name=name)
    scales = get_float_list(cfg, "sweep.scales")
    if scales is not None:
        kwargs["scales"] = scales
    exps = get_float_list(cfg, "sweep.mass_exponents")
    if exps is not None:
        kwargs["mass_exponents"] = exps
    for key, field_name in (
        ("duration", "duration"),
        ("settle_time", "settle_time"),
        ("perturbation", "perturbation"),
        ("sweep.torque_margin", "torque_margin"),
    ):
        val = get_float(cfg, key)
        if val is not None:
            kwargs[field_name] = val
    mode = get_str(cfg, "sweep.torque_mode")
    if mode is not None:
        kwargs["torque_mode"] = mode
    try:
        return SweepPlan(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def foot_plan_from(cfg, full_grid: Optional[bool] = None) -> FootSweepPlan:
    name = get_str(cfg, "design")
    if name is None:
        raise ConfigError("config is missing the 'design' key")
    kwargs = dict(base_name=name)
    mults = get_float_list(cfg, "foot.multipliers")
    if mults is not None:
        kwargs["multipliers"] = mults
    scales = get_float_list(cfg, "foot.scales")
    if scales is not None:
        kwargs["scales"] = scales
    for key, field_name in (
        ("mass_exponent", "mass_exponent"),
        ("duration", "duration"),
        ("settle_time", "settle_time"),
        ("perturbation", "perturbation"),
    ):
        val = get_float(cfg, key)
        if val is not None:
            kwargs[field_name] = val
    kwargs["full_grid"] = get_bool(cfg, "foot.full_grid") if full_grid is None else full_grid
    try:
        return FootSweepPlan(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
