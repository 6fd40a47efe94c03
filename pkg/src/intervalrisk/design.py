"""z-transformation and fixed-effects design construction.

Every midpoint and width variable (attributes and the overall question
alike) is standardized to zero mean and unit sample standard deviation
over the panel before modelling.  Interaction columns are products of
the two already-standardized parent columns and are deliberately *not*
re-standardized, so their coefficients stay interpretable as moderation
of one standardized effect by another.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import Dataset, OVERALL, attribute_codes, attribute_name

__all__ = [
    "DegenerateVariable",
    "InterceptRequired",
    "TermSpec",
    "INTERCEPT",
    "MIDPOINT",
    "WIDTH",
    "INTERACTION",
    "legal_terms",
    "StandardizationTable",
    "StandardizedDataset",
    "standardize",
    "DesignMatrix",
    "build_design",
    "subset_design",
]


class DegenerateVariable(ValueError):
    """A variable has zero variance and cannot be standardized."""


class InterceptRequired(ValueError):
    """Attempt to build a model without the intercept column."""


# ---- Terms ----

INTERCEPT = "intercept"
MIDPOINT = "midpoint"
WIDTH = "width"
INTERACTION = "interaction"


@dataclass(frozen=True)
class TermSpec:
    """One fixed-effect column: what it is, not where it sits."""

    label: str            # display label, e.g. "Frequency m"
    kind: str             # intercept | midpoint | width | interaction
    attribute: str | None  # attribute code; None for the intercept

    @property
    def key(self) -> str:
        """Stable machine-friendly identifier ("f_m", "a_mw", ...)."""
        if self.kind == INTERCEPT:
            return "intercept"
        suffix = {MIDPOINT: "m", WIDTH: "w", INTERACTION: "mw"}[self.kind]
        return f"{self.attribute}_{suffix}"


def _term(hop_kind: str, term_kind: str, code: str | None) -> TermSpec:
    if term_kind == INTERCEPT:
        return TermSpec("Intercept", INTERCEPT, None)
    name = attribute_name(hop_kind, code)
    suffix = {MIDPOINT: "m", WIDTH: "w", INTERACTION: "m·w"}[term_kind]
    return TermSpec(f"{name} {suffix}", term_kind, code)


def legal_terms(hop_kind: str) -> tuple[TermSpec, ...]:
    """Full term set in design order: intercept, midpoints, widths,
    then one midpoint-by-width interaction per attribute."""
    codes = attribute_codes(hop_kind)
    terms = [_term(hop_kind, INTERCEPT, None)]
    terms += [_term(hop_kind, MIDPOINT, c) for c in codes]
    terms += [_term(hop_kind, WIDTH, c) for c in codes]
    terms += [_term(hop_kind, INTERACTION, c) for c in codes]
    return tuple(terms)


# ---- Standardization ----

@dataclass(frozen=True)
class StandardizationTable:
    """Per-variable (mean, sd) used for the z-transformation.

    Keys are variable names like "f_m" / "f_w", including the overall
    outcome pair "o_m" / "o_w".  All sds are strictly positive.
    """

    entries: dict

    def mean(self, var: str) -> float:
        return self.entries[var][0]

    def sd(self, var: str) -> float:
        return self.entries[var][1]


@dataclass(frozen=True)
class StandardizedDataset:
    """Column-wise z-scores of a panel, plus its grouping labels."""

    kind: str
    expert_ids: tuple
    hop_ids: tuple
    columns: dict  # variable name -> np.ndarray of z-scores

    @property
    def n(self) -> int:
        return len(self.expert_ids)


def _variables(kind: str):
    for code in attribute_codes(kind, include_overall=True):
        yield f"{code}_m", code, "m"
        yield f"{code}_w", code, "w"


def standardize(dataset: Dataset) -> tuple[StandardizedDataset, StandardizationTable]:
    """z-transform every midpoint/width variable over the panel.

    Uses the sample (n-1) standard deviation.  Raises DegenerateVariable
    naming the offending variable if any column has zero variance (this
    needs at least two rows).
    """
    kind = dataset.kind
    raw = {}
    for var, code, which in _variables(kind):
        source = "midpoints" if which == "m" else "widths"
        raw[var] = np.array(
            [getattr(row, source)[code] for row in dataset.rows], dtype=float
        )

    columns, entries = {}, {}
    for var, values in raw.items():
        mean = float(np.mean(values))
        sd = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
        if sd <= 1e-12 * (1.0 + abs(mean)):
            raise DegenerateVariable(f"variable {var!r} has zero variance")
        columns[var] = (values - mean) / sd
        entries[var] = (mean, sd)

    std = StandardizedDataset(
        kind=kind,
        expert_ids=tuple(row.expert_id for row in dataset.rows),
        hop_ids=tuple(row.hop_id for row in dataset.rows),
        columns=columns,
    )
    return std, StandardizationTable(entries=entries)


# ---- Design matrix ----

@dataclass(frozen=True)
class DesignMatrix:
    """Fixed-effects design plus outcome and grouping labels.

    Column j of X corresponds to terms[j]; column 0 is always the
    intercept.  The overall midpoint/width never appears in X - it is
    the outcome only.
    """

    y: np.ndarray
    X: np.ndarray
    terms: tuple
    expert_index: tuple  # N grouping labels
    hop_index: tuple
    outcome_kind: str    # "m" or "w"
    kind: str            # hop kind the panel was assembled for

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def column_of(self, term: TermSpec) -> int:
        return self.terms.index(term)


def build_design(std: StandardizedDataset, outcome_kind: str) -> DesignMatrix:
    """Assemble [intercept | midpoints | widths | interactions] and the
    chosen standardized outcome ("m" or "w" of the overall question)."""
    if outcome_kind not in ("m", "w"):
        raise ValueError(f"outcome_kind must be 'm' or 'w', got {outcome_kind!r}")
    kind = std.kind
    codes = attribute_codes(kind)
    n = std.n

    cols = [np.ones(n)]
    cols += [std.columns[f"{c}_m"] for c in codes]
    cols += [std.columns[f"{c}_w"] for c in codes]
    for c in codes:
        product = std.columns[f"{c}_m"] * std.columns[f"{c}_w"]
        if float(np.std(product, ddof=1 if n > 1 else 0)) <= 1e-12:
            raise DegenerateVariable(f"variable {c!r} m·w interaction is constant")
        cols.append(product)

    X = np.column_stack(cols)
    y = np.asarray(std.columns[f"{OVERALL}_{outcome_kind}"], dtype=float)
    return DesignMatrix(
        y=y,
        X=X,
        terms=legal_terms(kind),
        expert_index=std.expert_ids,
        hop_index=std.hop_ids,
        outcome_kind=outcome_kind,
        kind=kind,
    )


def subset_design(design: DesignMatrix, keep_terms) -> DesignMatrix:
    """Restrict a design to a subset of its terms, preserving column
    order.  keep_terms may hold TermSpec objects or their .key strings.

    Raises InterceptRequired if the intercept is not kept; ValueError if
    a requested term is not in the design.
    """
    keys = set()
    for term in keep_terms:
        keys.add(term.key if isinstance(term, TermSpec) else str(term))
    known = {t.key for t in design.terms}
    unknown = keys - known
    if unknown:
        raise ValueError(f"terms not in design: {sorted(unknown)}")
    if "intercept" not in keys:
        raise InterceptRequired("the intercept column must be retained")

    idx = [j for j, t in enumerate(design.terms) if t.key in keys]
    return DesignMatrix(
        y=design.y,
        X=design.X[:, idx],
        terms=tuple(design.terms[j] for j in idx),
        expert_index=design.expert_index,
        hop_index=design.hop_index,
        outcome_kind=design.outcome_kind,
        kind=design.kind,
    )
