"""Backwards stepwise elimination of fixed effects.

Starting from the full design, each iteration nominates the weakest
non-significant unprotected term (the t statistic closest to zero),
refits without it, and compares the two nested ML fits by likelihood
ratio.  A removal must be doubly supported: the LR test must not reject
the reduction (p >= alpha) *and* the reduced model must carry the lower
BIC.  A candidate that survives either check is protected and never
nominated again.  The intercept is always retained, and no marginality
constraint ties interactions to their parent main effects.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .design import DesignMatrix, INTERCEPT, TermSpec, subset_design
from .inference import LRTestResult, lr_test
from .lme import FittedModel, fit_ml

__all__ = [
    "IterationCapExceeded",
    "StepwiseConfig",
    "StepwiseIteration",
    "StepwiseTrace",
    "step_candidate",
    "reduce",
]

#: BIC differences at or below this magnitude count as ties, which are
#: resolved toward the smaller (reduced) model.
BIC_TIE_TOLERANCE = 1e-9


class IterationCapExceeded(RuntimeError):
    """Elimination loop failed to terminate within the iteration cap."""


@dataclass(frozen=True)
class StepwiseConfig:
    """Tuning for the elimination loop."""

    alpha: float = 0.05
    max_iterations: int = 100

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha!r}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class StepwiseIteration:
    """One elimination decision, with everything needed to audit it."""

    index: int                 # 1-based iteration number
    candidate: TermSpec
    candidate_t: float
    candidate_p: float
    lr: LRTestResult
    aic_current: float
    bic_current: float
    aic_reduced: float
    bic_reduced: float
    decision: str              # "removed" or "protected"

    def to_dict(self) -> dict:
        return {
            "iteration": self.index,
            "candidate": self.candidate.key,
            "candidate_label": self.candidate.label,
            "candidate_t": self.candidate_t,
            "candidate_p": self.candidate_p,
            "lr_stat": self.lr.stat,
            "lr_df": self.lr.df,
            "lr_p": self.lr.p,
            "aic_current": self.aic_current,
            "bic_current": self.bic_current,
            "aic_reduced": self.aic_reduced,
            "bic_reduced": self.bic_reduced,
            "decision": self.decision,
        }


@dataclass(frozen=True)
class StepwiseTrace:
    """Full audit trail of a reduction run."""

    initial_terms: tuple
    iterations: tuple
    final_model: FittedModel
    clean_termination: bool
    protected: frozenset = field(default_factory=frozenset)  # term keys

    @property
    def removed_keys(self) -> tuple:
        return tuple(it.candidate.key for it in self.iterations
                     if it.decision == "removed")

    def to_dict(self) -> dict:
        return {
            "initial_terms": [t.key for t in self.initial_terms],
            "final_terms": [t.key for t in self.final_model.terms],
            "removed": list(self.removed_keys),
            "protected": sorted(self.protected),
            "clean_termination": self.clean_termination,
            "iterations": [it.to_dict() for it in self.iterations],
        }


def step_candidate(model: FittedModel, alpha: float, protected=frozenset()):
    """The next elimination candidate, or None when no term qualifies.

    Candidates are non-intercept, unprotected terms with p >= alpha; the
    one with |t| closest to zero wins, earlier design column breaking
    exact ties.
    """
    best_j = None
    for j, term in enumerate(model.terms):
        if term.kind == INTERCEPT or term.key in protected:
            continue
        if model.p[j] < alpha:
            continue
        if best_j is None or abs(model.t[j]) < abs(model.t[best_j]):
            best_j = j
    return None if best_j is None else model.terms[best_j]


def reduce(design: DesignMatrix, fit_fn=fit_ml, test_fn=lr_test,
           config: StepwiseConfig = StepwiseConfig()) -> StepwiseTrace:
    """Run backwards elimination to a final model.

    fit_fn and test_fn are injectable for testing; by default they are
    the ML fitter and the chi-square likelihood-ratio test.  The run is
    deterministic for a given design and configuration.
    """
    current_design = design
    current = fit_fn(current_design)
    protected: set = set()
    iterations: list = []

    while True:
        if len(iterations) >= config.max_iterations:
            raise IterationCapExceeded(
                f"no termination after {config.max_iterations} iterations"
            )
        candidate = step_candidate(current, config.alpha, protected)
        if candidate is None:
            break

        j = current_design.column_of(candidate)
        keep = [t for t in current_design.terms if t.key != candidate.key]
        reduced_design = subset_design(current_design, keep)
        reduced = fit_fn(reduced_design)
        lr = test_fn(current, reduced)

        if lr.p >= config.alpha and \
                reduced.bic <= current.bic + BIC_TIE_TOLERANCE:
            decision = "removed"
        else:
            # Either the LR test rejects the reduction or the smaller
            # model costs BIC: keep the term and never nominate it again.
            decision = "protected"

        iterations.append(StepwiseIteration(
            index=len(iterations) + 1,
            candidate=candidate,
            candidate_t=float(current.t[j]),
            candidate_p=float(current.p[j]),
            lr=lr,
            aic_current=current.aic,
            bic_current=current.bic,
            aic_reduced=reduced.aic,
            bic_reduced=reduced.bic,
            decision=decision,
        ))
        if decision == "removed":
            current_design, current = reduced_design, reduced
        else:
            protected.add(candidate.key)

    clean = all(
        term.kind == INTERCEPT or current.p[j] < config.alpha
        for j, term in enumerate(current.terms)
    )
    return StepwiseTrace(
        initial_terms=tuple(design.terms),
        iterations=tuple(iterations),
        final_model=current,
        clean_termination=clean,
        protected=frozenset(protected),
    )
