"""Synthetic response panels with known ground truth.

The generator draws attribute midpoints uniformly, widths uniformly
inside the geometric feasibility bound w <= 2*min(m, 100-m), then builds
*standardized* outcomes from a linear model over the in-sample z-scores
of those predictors - the same convention the analysis pipeline fits,
so declared coefficients live on the fitted scale.  Two outcomes are
generated per (expert, hop): one for the overall midpoint, one for the
overall width, with independent random-intercept and residual draws.
Each is mapped back to the response scale through a fixed affine map
and clamped, and the overall interval is reconstructed from the pair.

Note on calibration: the analysis z-transforms the overall outcome, so
fitted coefficients and variance components are relative to the total
outcome SD.  Declared values are recovered on their own scale when the
spec's total variance (sum of squared betas + all three variance
components) is near 1; recovery tests are built in that regime.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .design import MIDPOINT, WIDTH, INTERACTION, build_design, legal_terms, standardize
from .domain import (
    HopSpec,
    Interval,
    ResponseRecord,
    StudyConfig,
    assemble_dataset,
    attribute_codes,
)
from .lme import fit_ml
from .stepwise import StepwiseConfig, reduce

__all__ = [
    "InfeasibleSpec",
    "SimulationSpec",
    "MIDPOINT_MAP",
    "WIDTH_MAP",
    "make_hops",
    "generate_panel",
    "study_for_spec",
    "truth_metadata",
    "RecoveryReport",
    "recovery_report",
]

#: (mean, sd) affine maps from standardized outcomes back to scale units.
MIDPOINT_MAP = (50.0, 15.0)
WIDTH_MAP = (20.0, 10.0)

_BASE_STAMP = "2024-01-01T00:00:00+00:00"


class InfeasibleSpec(ValueError):
    """Simulation parameters that cannot produce a valid panel."""


@dataclass(frozen=True)
class SimulationSpec:
    """Ground truth for one synthetic panel.

    true_beta maps term keys ("d_m", "r_w", "g_mw", "intercept") to
    coefficients on the standardized-outcome scale; omitted terms are
    zero.  Standard deviations are on the same scale.
    """

    seed: int
    n_experts: int
    hops: tuple
    true_beta: dict = field(default_factory=dict)
    sd_expert: float = 0.0
    sd_hop: float = 0.0
    sd_residual: float = 0.0
    midpoint_range: tuple = (10.0, 90.0)

    def __post_init__(self):
        if self.n_experts < 1:
            raise InfeasibleSpec(f"n_experts must be >= 1, got {self.n_experts}")
        if not self.hops:
            raise InfeasibleSpec("hops must be non-empty")
        for sd, name in ((self.sd_expert, "sd_expert"),
                         (self.sd_hop, "sd_hop"),
                         (self.sd_residual, "sd_residual")):
            if sd < 0:
                raise InfeasibleSpec(f"{name} must be >= 0, got {sd}")
        lo, hi = self.midpoint_range
        if not (0.0 <= lo < hi <= 100.0):
            raise InfeasibleSpec(
                f"midpoint_range must be an ordered sub-range of [0, 100], "
                f"got {self.midpoint_range}"
            )
        kinds = {h.kind for h in self.hops}
        legal_keys = {t.key for k in kinds for t in legal_terms(k)}
        illegal = set(self.true_beta) - legal_keys
        if illegal:
            raise InfeasibleSpec(
                f"true_beta keys not legal for hop kinds {sorted(kinds)}: "
                f"{sorted(illegal)}"
            )

    @property
    def kinds(self) -> tuple:
        return tuple(sorted({h.kind for h in self.hops}))


def make_hops(n_attack: int = 0, n_evade: int = 0) -> tuple:
    """Generic numbered hops, attack first."""
    hops = [HopSpec(f"A{i+1:02d}", f"attack hop {i+1}", "attack")
            for i in range(n_attack)]
    hops += [HopSpec(f"V{i+1:02d}", f"evade hop {i+1}", "evade")
             for i in range(n_evade)]
    return tuple(hops)


def study_for_spec(spec: SimulationSpec, study_id: str = "simulated") -> StudyConfig:
    """Study configuration matching a simulation's hops."""
    return StudyConfig(study_id=study_id, hops=tuple(spec.hops))


def truth_metadata(spec: SimulationSpec) -> dict:
    """Ground-truth sidecar describing exactly what was generated."""
    return {
        "seed": spec.seed,
        "n_experts": spec.n_experts,
        "hops": [
            {"hop_id": h.hop_id, "name": h.name, "kind": h.kind}
            for h in spec.hops
        ],
        "true_beta": dict(spec.true_beta),
        "sd_expert": spec.sd_expert,
        "sd_hop": spec.sd_hop,
        "sd_residual": spec.sd_residual,
        "midpoint_range": list(spec.midpoint_range),
        "outcome_maps": {
            "midpoint": {"mean": MIDPOINT_MAP[0], "sd": MIDPOINT_MAP[1]},
            "width": {"mean": WIDTH_MAP[0], "sd": WIDTH_MAP[1]},
        },
        "outcome_clamping": "affine-mapped outcomes and interval endpoints "
                            "are clamped to the [0, 100] scale",
    }


def _zscore(columns: np.ndarray) -> np.ndarray:
    means = columns.mean(axis=0)
    sds = columns.std(axis=0, ddof=1)
    if np.any(sds <= 0):
        raise InfeasibleSpec("degenerate predictor draw; enlarge the panel")
    return (columns - means) / sds


def generate_panel(spec: SimulationSpec) -> list:
    """Draw one complete panel of ResponseRecords (deterministic per seed).

    Hop kinds are generated as independent sub-panels, mirroring the
    per-kind analyses downstream.  Record order and timestamps are
    deterministic functions of the spec alone.
    """
    rng = np.random.default_rng(spec.seed)
    experts = [f"E{i+1:02d}" for i in range(spec.n_experts)]
    records: list = []
    counter = 0

    for kind in spec.kinds:
        hops = [h for h in spec.hops if h.kind == kind]
        codes = attribute_codes(kind)
        pairs = [(e, h) for e in experts for h in hops]
        n = len(pairs)
        if n < 2:
            raise InfeasibleSpec(
                f"{kind} sub-panel has {n} row(s); need at least 2"
            )

        lo, hi = spec.midpoint_range
        mid = rng.uniform(lo, hi, size=(n, len(codes)))
        cap = 2.0 * np.minimum(mid, 100.0 - mid)
        wid = rng.uniform(0.0, cap)

        mid_z = _zscore(mid)
        wid_z = _zscore(wid)
        eta = np.zeros(n)
        for key, beta in spec.true_beta.items():
            col = _simulated_column(key, kind, codes, mid_z, wid_z)
            if col is not None:
                eta = eta + beta * col

        expert_idx = np.array([experts.index(e) for e, _ in pairs])
        hop_idx = np.array([hops.index(h) for _, h in pairs])

        def mapped_outcome(mapping):
            expert_effect = rng.normal(0.0, spec.sd_expert, size=len(experts))
            hop_effect = rng.normal(0.0, spec.sd_hop, size=len(hops))
            noise = rng.normal(0.0, spec.sd_residual, size=n)
            y = eta + expert_effect[expert_idx] + hop_effect[hop_idx] + noise
            mean, sd = mapping
            return np.clip(mean + sd * y, 0.0, 100.0)

        overall_mid = mapped_outcome(MIDPOINT_MAP)
        overall_wid = mapped_outcome(WIDTH_MAP)

        for i, (expert, hop) in enumerate(pairs):
            for j, code in enumerate(codes):
                records.append(_record(
                    expert, hop, code, mid[i, j], wid[i, j], counter))
                counter += 1
            om, ow = overall_mid[i], overall_wid[i]
            lo_o = np.clip(om - ow / 2.0, 0.0, 100.0)
            hi_o = np.clip(om + ow / 2.0, 0.0, 100.0)
            records.append(ResponseRecord(
                expert_id=expert,
                hop_id=hop.hop_id,
                attribute="o",
                interval=Interval(float(lo_o), float(max(lo_o, hi_o))),
                submitted_at=_stamp(counter),
            ))
            counter += 1
    return records


def _simulated_column(key, kind, codes, mid_z, wid_z):
    """Design column for a term key, or None if not of this hop kind."""
    if key == "intercept":
        return np.ones(mid_z.shape[0])
    code, suffix = key.rsplit("_", 1)
    if code not in codes:
        return None  # belongs to the other hop kind
    j = codes.index(code)
    if suffix == "m":
        return mid_z[:, j]
    if suffix == "w":
        return wid_z[:, j]
    if suffix == "mw":
        return mid_z[:, j] * wid_z[:, j]
    raise InfeasibleSpec(f"unparseable term key {key!r}")


def _record(expert, hop, code, m, w, counter):
    lo = float(np.clip(m - w / 2.0, 0.0, 100.0))
    hi = float(np.clip(m + w / 2.0, 0.0, 100.0))
    return ResponseRecord(
        expert_id=expert,
        hop_id=hop.hop_id,
        attribute=code,
        interval=Interval(lo, max(lo, hi)),
        submitted_at=_stamp(counter),
    )


def _stamp(counter: int) -> str:
    # Deterministic synthetic timestamps: base instant plus one second
    # per record, kept lexicographically sortable.
    minutes, seconds = divmod(counter, 60)
    hours, minutes = divmod(minutes, 60)
    days, hours = divmod(hours, 24)
    return f"2024-01-{1+days:02d}T{hours:02d}:{minutes:02d}:{seconds:02d}+00:00"


# ---- Parameter recovery ----

@dataclass(frozen=True)
class RecoveryReport:
    """Per-term and variance-component recovery over repeated panels."""

    n_runs: int
    term_keys: tuple
    true_beta: dict
    mean_estimate: dict     # term key -> mean full-model estimate
    empirical_se: dict      # term key -> sd of estimates over runs
    retention_rate: dict    # term key -> fraction of runs kept by stepwise
    coverage_rate: dict     # term key -> fraction of runs with truth in +-1.96 SE
    mean_sd_expert: float
    mean_sd_hop: float
    mean_sd_residual: float


def recovery_report(spec: SimulationSpec, n_runs: int,
                    alpha: float = 0.05) -> RecoveryReport:
    """Generate, refit and reduce n_runs panels; summarize recovery.

    Estimates, SEs and coverage come from the full-model fit (every term
    present in every run); retention comes from the stepwise reduction.
    Run r uses seed spec.seed + r.
    """
    if len(spec.kinds) != 1:
        raise InfeasibleSpec("recovery_report needs a single-kind spec")
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    kind = spec.kinds[0]
    config = study_for_spec(spec)
    term_keys = tuple(t.key for t in legal_terms(kind))

    estimates = {k: [] for k in term_keys}
    covered = {k: 0 for k in term_keys}
    retained = {k: 0 for k in term_keys}
    sds = []

    for run in range(n_runs):
        run_spec = replace(spec, seed=spec.seed + run)
        records = generate_panel(run_spec)
        dataset = assemble_dataset(records, config, kind)
        std, _ = standardize(dataset)
        design = build_design(std, "m")
        full = fit_ml(design)
        trace = reduce(design, config=StepwiseConfig(alpha=alpha))
        final_keys = {t.key for t in trace.final_model.terms}

        for j, term in enumerate(full.terms):
            key = term.key
            est, se = float(full.beta[j]), float(full.se[j])
            estimates[key].append(est)
            truth = float(spec.true_beta.get(key, 0.0))
            if abs(est - truth) <= 1.959964 * se:
                covered[key] += 1
            if key in final_keys:
                retained[key] += 1
        sds.append((full.vc.sd_expert, full.vc.sd_hop, full.vc.sd_residual))

    sds_arr = np.array(sds)
    return RecoveryReport(
        n_runs=n_runs,
        term_keys=term_keys,
        true_beta={k: float(spec.true_beta.get(k, 0.0)) for k in term_keys},
        mean_estimate={k: float(np.mean(v)) for k, v in estimates.items()},
        empirical_se={
            k: float(np.std(v, ddof=1)) if len(v) > 1 else 0.0
            for k, v in estimates.items()
        },
        retention_rate={k: retained[k] / n_runs for k in term_keys},
        coverage_rate={k: covered[k] / n_runs for k in term_keys},
        mean_sd_expert=float(sds_arr[:, 0].mean()),
        mean_sd_hop=float(sds_arr[:, 1].mean()),
        mean_sd_residual=float(sds_arr[:, 2].mean()),
    )
