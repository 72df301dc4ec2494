"""Scaling studies of single-actuator quasi-passive bipedal walkers.

The package simulates two-body curved-foot walkers driven by one hip motor,
sweeps them across geometric scales and foot shapes, and fits the resulting
power laws against reference scaling relations.
"""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    FootGeometry,
    RigidBodySpec,
    ScalingLaw,
    WalkerDesign,
    builtin_design,
    build_bodies,
    scale_design,
)
from .contact import (  # noqa: F401
    ContactForce,
    ContactParams,
    contact_force,
    default_contact_params,
    lowest_point,
    scale_contact_params,
)
from .control import (  # noqa: F401
    BangBang,
    ControllerSpec,
    SinusoidalPosition,
    controller_torque,
    scale_controller,
)
from .dynamics import (  # noqa: F401
    SimulationDiverged,
    WalkerState,
    Wrench,
    forward_dynamics,
    standing_state,
    step,
    time_step_for,
)
from .simulate import (  # noqa: F401
    Trajectory,
    TrialConfig,
    TrialVerdict,
    attitude_amplitudes,
    detect_limit_cycle,
    run_trial,
)
from .metrics import (  # noqa: F401
    TrialResult,
    froude,
    mean_velocity,
    result_from_trial,
    results_to_csv,
    stride_frequency,
)
from .experiments import (  # noqa: F401
    FootSweepPlan,
    SweepPlan,
    foot_sweep,
    min_torque_search,
    scale_sweep,
    scaled_variant,
)
from .allometry import (  # noqa: F401
    PowerLawFit,
    SurveyRecord,
    compare_to_reference,
    fit_power_law,
    load_survey,
    survey_regressions,
)
from .config import (  # noqa: F401
    ConfigError,
    design_from,
    design_to_config,
    load_config,
    parse_config,
)
