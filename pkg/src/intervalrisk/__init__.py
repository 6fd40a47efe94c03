"""Capture and analysis of interval-valued expert judgements.

Experts rate attributes of cyber-system hops with [lower, upper]
ranges on a 0-100 scale.  Each interval is decomposed into a midpoint
(the rating) and a width (the uncertainty); both are z-standardized
and modelled jointly with crossed expert and hop random intercepts,
then reduced by backwards stepwise elimination.
"""

from .domain import (
    ATTACK,
    ATTACK_ATTRIBUTES,
    EVADE,
    EVADE_ATTRIBUTES,
    HOP_KINDS,
    OVERALL,
    Dataset,
    EmptyDataset,
    HopSpec,
    IllegalAttribute,
    Interval,
    MalformedInterval,
    ObservationRow,
    ResponseRecord,
    StudyConfig,
    UnknownHop,
    assemble_dataset,
    check_raw_record,
    default_study,
    interval_summaries,
    validate_record,
)
from .design import (
    DegenerateVariable,
    DesignMatrix,
    StandardizedDataset,
    TermSpec,
    build_design,
    legal_terms,
    standardize,
    subset_design,
)
from .inference import LRTestResult, chi2_sf, lr_test, t_sf, t_two_sided_p
from .lme import (
    FittedModel,
    NonConvergence,
    SingularDesign,
    VarianceComponents,
    fit_fixed,
    fit_ml,
    profiled_deviance,
)
from .simulate import (
    InfeasibleSpec,
    RecoveryReport,
    SimulationSpec,
    generate_panel,
    make_hops,
    recovery_report,
    study_for_spec,
    truth_metadata,
)
from .stepwise import (
    StepwiseConfig,
    StepwiseIteration,
    StepwiseTrace,
    reduce,
    step_candidate,
)

__version__ = "0.1.0"

__all__ = [
    "ATTACK",
    "ATTACK_ATTRIBUTES",
    "EVADE",
    "EVADE_ATTRIBUTES",
    "HOP_KINDS",
    "OVERALL",
    "Dataset",
    "DegenerateVariable",
    "DesignMatrix",
    "EmptyDataset",
    "FittedModel",
    "HopSpec",
    "IllegalAttribute",
    "InfeasibleSpec",
    "Interval",
    "LRTestResult",
    "MalformedInterval",
    "NonConvergence",
    "ObservationRow",
    "RecoveryReport",
    "ResponseRecord",
    "SimulationSpec",
    "SingularDesign",
    "StandardizedDataset",
    "StepwiseConfig",
    "StepwiseIteration",
    "StepwiseTrace",
    "StudyConfig",
    "TermSpec",
    "UnknownHop",
    "VarianceComponents",
    "assemble_dataset",
    "build_design",
    "check_raw_record",
    "chi2_sf",
    "default_study",
    "fit_fixed",
    "fit_ml",
    "generate_panel",
    "interval_summaries",
    "legal_terms",
    "lr_test",
    "make_hops",
    "profiled_deviance",
    "recovery_report",
    "standardize",
    "step_candidate",
    "study_for_spec",
    "subset_design",
    "t_sf",
    "t_two_sided_p",
    "truth_metadata",
    "validate_record",
    "reduce",
]
