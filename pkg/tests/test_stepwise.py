"""Backwards elimination: candidate choice, decision rules, audit trail."""

from __future__ import annotations

import dataclasses
import json
from types import SimpleNamespace

import numpy as np
import pytest

from intervalrisk.design import legal_terms
from intervalrisk.inference import LRTestResult
from intervalrisk.lme import fit_ml
from intervalrisk.stepwise import (
    BIC_TIE_TOLERANCE,
    IterationCapExceeded,
    StepwiseConfig,
    reduce,
    step_candidate,
)

from simhelpers import panel_design


def _stub(p_values, t_values, kind="evade"):
    terms = legal_terms(kind)[: len(p_values)]
    return SimpleNamespace(terms=terms, p=np.asarray(p_values, dtype=float),
                           t=np.asarray(t_values, dtype=float))


# ---- Candidate selection ----

def test_candidate_is_smallest_t_above_alpha():
    model = _stub(p_values=[0.9, 0.01, 0.40, 0.60],
                  t_values=[0.1, 2.8, 0.85, -0.52])
    # Intercept is ineligible despite its tiny |t|; among the eligible
    # (p >= alpha) terms the one with |t| nearest zero wins.
    assert step_candidate(model, 0.05).key == "r_m"


def test_candidate_ignores_significant_terms():
    model = _stub(p_values=[0.9, 0.001, 0.002, 0.03],
                  t_values=[0.1, 3.5, 3.1, 2.2])
    assert step_candidate(model, 0.05) is None


def test_candidate_respects_protection():
    model = _stub(p_values=[0.9, 0.60, 0.40], t_values=[0.1, -0.52, 0.85])
    assert step_candidate(model, 0.05).key == "c_m"
    assert step_candidate(model, 0.05, protected={"c_m"}).key == "a_m"
    assert step_candidate(model, 0.05, protected={"c_m", "a_m"}) is None


def test_candidate_tie_breaks_by_column_order():
    model = _stub(p_values=[0.9, 0.5, 0.5], t_values=[0.1, 0.7, -0.7])
    assert step_candidate(model, 0.05).key == "c_m"


def test_candidate_alpha_boundary():
    # p exactly at alpha counts as removable (the rule is p >= alpha).
    model = _stub(p_values=[0.9, 0.05], t_values=[0.1, 1.96])
    assert step_candidate(model, 0.05).key == "c_m"


# ---- Full reductions on simulated panels ----

@pytest.fixture(scope="module")
def reduction():
    design = panel_design(seed=101, n_experts=10, n_attack=8,
                          true_beta={"d_m": 0.5, "g_m": 0.4},
                          sd_expert=0.3, sd_hop=0.3, sd_residual=0.7)
    return design, reduce(design)


def test_reduce_shrinks_to_significant_terms(reduction):
    design, trace = reduction
    final_keys = {t.key for t in trace.final_model.terms}
    assert "intercept" in final_keys
    assert len(final_keys) < len(design.terms)


def test_reduce_decision_rules_hold(reduction):
    _, trace = reduction
    for it in trace.iterations:
        if it.decision == "removed":
            assert it.candidate_p >= 0.05
            assert it.lr.p >= 0.05
            assert it.bic_reduced <= it.bic_current + BIC_TIE_TOLERANCE
        else:
            # Protection requires at least one veto.
            assert (it.lr.p < 0.05
                    or it.bic_reduced > it.bic_current + BIC_TIE_TOLERANCE)


def test_reduce_removals_match_final_model(reduction):
    design, trace = reduction
    expected = [t.key for t in design.terms
                if t.key not in set(trace.removed_keys)]
    assert [t.key for t in trace.final_model.terms] == expected


def test_reduce_iterations_are_sequential(reduction):
    _, trace = reduction
    assert [it.index for it in trace.iterations] == list(
        range(1, len(trace.iterations) + 1))


def test_clean_termination_flag(reduction):
    _, trace = reduction
    final = trace.final_model
    non_intercept_ps = [float(final.p[j]) for j, t in enumerate(final.terms)
                        if t.kind != "intercept"]
    assert trace.clean_termination == all(p < 0.05 for p in non_intercept_ps)


def test_reduce_is_deterministic():
    design = panel_design(seed=102, n_experts=9, n_attack=7,
                          true_beta={"d_m": 0.4})
    one = reduce(design).to_dict()
    two = reduce(design).to_dict()
    assert json.dumps(one, sort_keys=True) == json.dumps(two, sort_keys=True)


def test_reduce_iteration_cap():
    design = panel_design(seed=103, n_experts=9, n_attack=7)
    with pytest.raises(IterationCapExceeded):
        reduce(design, config=StepwiseConfig(max_iterations=1))


def test_reduce_tiny_alpha_examines_everything():
    # With alpha near zero every term whose p is not microscopic becomes
    # a candidate, so each survivor is either ultra-significant or was
    # explicitly vetoed (protected) along the way.
    design = panel_design(seed=104, n_experts=9, n_attack=7,
                          true_beta={"d_m": 0.6})
    trace = reduce(design, config=StepwiseConfig(alpha=1e-6))
    final = trace.final_model
    protected = set(trace.protected)
    for j, term in enumerate(final.terms):
        if term.kind == "intercept":
            continue
        assert float(final.p[j]) < 1e-6 or term.key in protected


# ---- Injected fits and tests exercise the veto branches ----

def test_lr_veto_protects_candidate():
    design = panel_design(seed=105, n_experts=9, n_attack=7)

    def always_reject(full, reduced):
        return LRTestResult(stat=99.0, df=1, p=0.0)

    trace = reduce(design, test_fn=always_reject)
    assert all(it.decision == "protected" for it in trace.iterations)
    assert len(trace.final_model.terms) == len(design.terms)
    assert not trace.clean_termination
    assert set(trace.protected) == {it.candidate.key for it in trace.iterations}


def test_bic_veto_protects_candidate():
    design = panel_design(seed=106, n_experts=9, n_attack=7)
    full_p = design.p

    def inflating_fit(d):
        model = fit_ml(d)
        if d.p < full_p:  # every reduced refit looks worse on BIC
            model = dataclasses.replace(model, bic=model.bic + 1000.0)
        return model

    trace = reduce(design, fit_fn=inflating_fit)
    assert trace.iterations  # something was examined
    for it in trace.iterations:
        assert it.decision == "protected"
        assert it.bic_reduced > it.bic_current + BIC_TIE_TOLERANCE


# ---- Configuration ----

@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.2, 1.7])
def test_config_rejects_bad_alpha(alpha):
    with pytest.raises(ValueError):
        StepwiseConfig(alpha=alpha)


def test_config_rejects_bad_cap():
    with pytest.raises(ValueError):
        StepwiseConfig(max_iterations=0)


def test_trace_serializes(reduction):
    _, trace = reduction
    payload = trace.to_dict()
    text = json.dumps(payload, sort_keys=True)
    assert json.loads(text) == payload
    assert payload["initial_terms"][0] == "intercept"
    assert isinstance(payload["clean_termination"], bool)
