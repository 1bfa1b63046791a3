"""ISS certificates for 1-D parabolic PDEs with boundary disturbances.

Typical use::

    from iss_certify import reaction_diffusion_spec, certify
    tspec, params, gains = certify(reaction_diffusion_spec(1.0, 0.0, 1.0, 1.0))
"""

from .errors import ConfigError, InfeasibleError, IssCertifyError, PreconditionError, SolverError
from .model import (
    Field,
    FieldTerm,
    InitialProfile,
    Nonlinearity,
    ProblemSpec,
    ProfileTerm,
    Signal,
    SignalTerm,
    SpaceFactor,
    ValidationReport,
    check_compatibility,
    check_nonlinearity,
    validate_structure,
)
from .solver import (
    Grid,
    SolverOptions,
    Trajectory,
    l2_profile,
    profile_l2,
    simulate_full,
    simulate_v,
    simulate_w,
    sup_norm_field,
    sup_norm_signal,
    transformed_data,
    untransform,
)
from .transform import (
    GainSet,
    KFunction,
    SplitParams,
    TransformedSpec,
    certify,
    check_split_params,
    choose_split_params,
    closed_form_gains_ginzburg_landau,
    closed_form_gains_reaction_diffusion,
    compute_gain_set,
    evaluate_iss_bound,
    ginzburg_landau_spec,
    max_estimate_bound,
    reaction_diffusion_spec,
    tilde_gains,
    transform_spec,
)
from .verify import (
    ScenarioFamilies,
    ScenarioSuite,
    VerificationReport,
    agmon_check,
    convergence_study,
    run_scenario_suite,
    verify_iss,
    verify_max_estimate,
    verify_superposition,
    verify_w_l2,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "InfeasibleError",
    "IssCertifyError",
    "PreconditionError",
    "SolverError",
    "Field",
    "FieldTerm",
    "InitialProfile",
    "Nonlinearity",
    "ProblemSpec",
    "ProfileTerm",
    "Signal",
    "SignalTerm",
    "SpaceFactor",
    "ValidationReport",
    "check_compatibility",
    "check_nonlinearity",
    "validate_structure",
    "Grid",
    "SolverOptions",
    "Trajectory",
    "l2_profile",
    "profile_l2",
    "simulate_full",
    "simulate_v",
    "simulate_w",
    "sup_norm_field",
    "sup_norm_signal",
    "transformed_data",
    "untransform",
    "GainSet",
    "KFunction",
    "SplitParams",
    "TransformedSpec",
    "certify",
    "check_split_params",
    "choose_split_params",
    "closed_form_gains_ginzburg_landau",
    "closed_form_gains_reaction_diffusion",
    "compute_gain_set",
    "evaluate_iss_bound",
    "ginzburg_landau_spec",
    "max_estimate_bound",
    "reaction_diffusion_spec",
    "tilde_gains",
    "transform_spec",
    "ScenarioFamilies",
    "ScenarioSuite",
    "VerificationReport",
    "agmon_check",
    "convergence_study",
    "run_scenario_suite",
    "verify_iss",
    "verify_max_estimate",
    "verify_superposition",
    "verify_w_l2",
]
