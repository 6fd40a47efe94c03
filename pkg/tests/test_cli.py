"""Command-line interface: exit codes, report shapes, pipeline plumbing.

All invocations go through main(argv) in-process; stdout/stderr are
captured with capsys.
"""

from __future__ import annotations

import json
import re

import pytest

from intervalrisk.cli import main
from intervalrisk.report import dumps_payload

# Small but loud: at N = 48 with 22 attack terms the planted effect must
# dominate the noise for the reduction tests to be stable.
SPEC = {
    "seed": 4242,
    "n_experts": 8,
    "hops": {"n_attack": 6, "n_evade": 5},
    "true_beta": {"d_m": 1.2},
    "sd_expert": 0.2,
    "sd_hop": 0.2,
    "sd_residual": 0.5,
}


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture(scope="module")
def panel(tmp_path_factory):
    """One simulated study reused read-only by the whole module."""
    root = tmp_path_factory.mktemp("panel")
    spec_path = root / "spec.json"
    spec_path.write_text(json.dumps(SPEC))
    assert main(["simulate", "--spec", str(spec_path),
                 "--out", str(root)]) == 0
    return {"dir": root, "spec": spec_path, "csv": root / "panel.csv",
            "study": root / "study.json", "truth": root / "truth.json"}


# ---- validate ----

def test_validate_clean_file(panel, capsys):
    code, out, _ = run(capsys, "validate", "--data", str(panel["csv"]))
    assert code == 0
    assert "0 violation(s)" in out
    assert "complete cases: attack 48, evade 40" in out


def test_validate_reversed_interval_cites_row(panel, tmp_path, capsys):
    lines = panel["csv"].read_text().splitlines()
    fields = lines[3].split(",")
    fields[4], fields[5] = "80.0", "20.0"  # lower > upper
    lines[3] = ",".join(fields)
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(lines) + "\n")

    code, out, _ = run(capsys, "validate", "--data", str(bad))
    assert code == 1
    assert f"{bad}:4: MalformedInterval" in out
    assert "1 violation(s)" in out


def test_validate_illegal_evade_attribute(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text(
        "expert_id,hop_id,hop_type,attribute,lower,upper,submitted_at\n"
        "e1,V01,evade,g,10,20,2026-01-01T00:00:00\n")
    code, out, _ = run(capsys, "validate", "--data", str(bad))
    assert code == 1
    assert "IllegalAttribute" in out


def test_validate_writes_report_to_out_file(panel, tmp_path, capsys):
    report = tmp_path / "report.txt"
    code, out, _ = run(capsys, "validate", "--data", str(panel["csv"]),
                       "--out", str(report))
    assert code == 0 and out == ""
    assert "0 violation(s)" in report.read_text()


def test_validate_nonexistent_file(tmp_path, capsys):
    code, _, err = run(capsys, "validate",
                       "--data", str(tmp_path / "missing.csv"))
    assert code == 1
    assert "cannot read data file" in err


# ---- usage errors ----

def test_no_subcommand_is_usage_error(capsys):
    assert run(capsys, *[])[0] == 3


def test_unknown_kind_is_usage_error(panel, capsys):
    code, _, err = run(capsys, "fit", "--data", str(panel["csv"]),
                       "--kind", "sideways", "--outcome", "m")
    assert code == 3
    assert "usage error" in err


def test_unknown_flag_is_usage_error(panel, capsys):
    code, _, _ = run(capsys, "validate", "--data", str(panel["csv"]),
                     "--frobnicate")
    assert code == 3


def test_help_exits_zero(capsys):
    assert run(capsys, "--help")[0] == 0


# ---- data errors surfaced by fit ----

def test_fit_malformed_csv_row_names_line(panel, tmp_path, capsys):
    lines = panel["csv"].read_text().splitlines()
    lines[2] = lines[2] + ",stray,fields"
    bad = tmp_path / "ragged.csv"
    bad.write_text("\n".join(lines) + "\n")
    code, _, err = run(capsys, "fit", "--data", str(bad),
                       "--kind", "attack", "--outcome", "m")
    assert code == 1
    assert f"{bad}:3: ParseError" in err


def test_jsonl_requires_study(panel, tmp_path, capsys):
    spec_path = panel["spec"]
    out = tmp_path / "jl"
    assert main(["simulate", "--spec", str(spec_path), "--out", str(out),
                 "--format", "jsonl"]) == 0
    capsys.readouterr()

    code, _, err = run(capsys, "validate", "--data", str(out / "panel.jsonl"))
    assert code == 1
    assert "--study" in err

    code, out_text, _ = run(capsys, "validate",
                            "--data", str(out / "panel.jsonl"),
                            "--study", str(panel["study"]))
    assert code == 0
    assert "0 violation(s)" in out_text


def test_fit_constant_column_is_fit_error(panel, tmp_path, capsys):
    # Every expert answers attribute c identically: zero variance, so the
    # variable cannot be standardized.
    lines = panel["csv"].read_text().splitlines()
    flattened = [lines[0]]
    for line in lines[1:]:
        fields = line.split(",")
        if fields[3] == "c":
            fields[4], fields[5] = "40.0", "60.0"
        flattened.append(",".join(fields))
    bad = tmp_path / "constant.csv"
    bad.write_text("\n".join(flattened) + "\n")
    code, _, err = run(capsys, "fit", "--data", str(bad),
                       "--kind", "attack", "--outcome", "m")
    assert code == 2
    assert "fit error" in err


# ---- fit reports ----

def _fit_payload(panel, capsys, kind, outcome):
    code, out, _ = run(capsys, "fit", "--data", str(panel["csv"]),
                       "--kind", kind, "--outcome", outcome,
                       "--format", "json")
    assert code == 0
    return json.loads(out)


def test_fit_attack_m_has_22_fixed_rows(panel, capsys):
    payload = _fit_payload(panel, capsys, "attack", "m")
    assert len(payload["fixed_effects"]) == 22
    assert payload["fixed_effects"][0]["key"] == "intercept"
    assert payload["n"] == 48  # 8 experts x 6 attack hops, no dropout


def test_fit_evade_w_has_10_fixed_rows(panel, capsys):
    payload = _fit_payload(panel, capsys, "evade", "w")
    assert len(payload["fixed_effects"]) == 10
    assert payload["n"] == 40


def test_fit_json_round_trips(panel, capsys):
    code, out, _ = run(capsys, "fit", "--data", str(panel["csv"]),
                       "--kind", "attack", "--outcome", "m",
                       "--format", "json")
    assert code == 0
    assert dumps_payload(json.loads(out)) == out


def test_fit_text_footer_shape(panel, capsys):
    code, out, _ = run(capsys, "fit", "--data", str(panel["csv"]),
                       "--kind", "attack", "--outcome", "m")
    assert code == 0
    footer = out.rstrip("\n").splitlines()[-1]
    assert re.fullmatch(
        r"N = \d+, DF = \d+, AIC = -?\d+\.\d, BIC=-?\d+\.\d", footer)
    assert "N = 48, DF = 26, " in footer  # 48 - 22 params


def test_fit_csv_format(panel, capsys):
    code, out, _ = run(capsys, "fit", "--data", str(panel["csv"]),
                       "--kind", "evade", "--outcome", "m",
                       "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "section,label,estimate,se,t,p"
    assert sum(1 for l in lines if l.startswith("fixed,")) == 10
    assert sum(1 for l in lines if l.startswith("random,")) == 3
    assert lines[-1].startswith("summary,BIC,")


def test_fit_markdown_format(panel, capsys):
    code, out, _ = run(capsys, "fit", "--data", str(panel["csv"]),
                       "--kind", "attack", "--outcome", "w",
                       "--format", "markdown")
    assert code == 0
    assert "| Fixed Effects Estimates | β | SE | t | p |" in out
    assert "| Random Effects Estimates | SD |" in out


# ---- simulate ----

def test_simulate_is_deterministic(panel, tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["simulate", "--spec", str(panel["spec"]),
                     "--out", str(out)]) == 0
    capsys.readouterr()
    assert (a / "panel.csv").read_bytes() == (b / "panel.csv").read_bytes()
    assert (a / "truth.json").read_bytes() == (b / "truth.json").read_bytes()
    assert (a / "panel.csv").read_bytes() == panel["csv"].read_bytes()


def test_simulate_seed_override_changes_data(panel, tmp_path, capsys):
    out = tmp_path / "other"
    assert main(["simulate", "--spec", str(panel["spec"]), "--out", str(out),
                 "--seed", "777"]) == 0
    capsys.readouterr()
    assert (out / "panel.csv").read_bytes() != panel["csv"].read_bytes()
    truth = json.loads((out / "truth.json").read_text())
    assert truth["seed"] == 777


def test_simulate_sidecar_matches_spec(panel):
    truth = json.loads(panel["truth"].read_text())
    assert set(truth["true_beta"]) == set(SPEC["true_beta"])
    assert truth["true_beta"]["d_m"] == 1.2
    assert truth["n_experts"] == SPEC["n_experts"]


def test_simulate_row_count_is_full_grid(panel):
    rows = panel["csv"].read_text().splitlines()[1:]
    # 8 experts x (6 attack hops x 8 attrs + 5 evade hops x 4 attrs)
    assert len(rows) == 8 * (6 * 8 + 5 * 4)


# ---- stepwise ----

@pytest.fixture(scope="module")
def stepwise_run(panel, tmp_path_factory):
    root = tmp_path_factory.mktemp("stepwise")
    out = root / "report.json"
    code = main(["stepwise", "--data", str(panel["csv"]),
                 "--kind", "attack", "--outcome", "m",
                 "--format", "json", "--out", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    trace = json.loads((root / "report.trace.json").read_text())
    return payload, trace, out


def test_stepwise_writes_trace_alongside_out(stepwise_run):
    payload, trace, out = stepwise_run
    assert out.with_name("report.trace.json").exists()
    assert set(trace) == {"initial_terms", "final_terms", "removed",
                          "protected", "clean_termination", "iterations"}
    assert set(trace["final_terms"]) <= set(trace["initial_terms"])
    assert len(trace["initial_terms"]) == 22


def test_stepwise_intercept_always_reported(stepwise_run):
    payload, trace, _ = stepwise_run
    assert payload["fixed_effects"][0]["key"] == "intercept"
    assert "intercept" in trace["final_terms"]


def test_stepwise_report_embeds_trace(stepwise_run):
    payload, trace, _ = stepwise_run
    assert payload["stepwise"] == trace
    assert payload["alpha"] == 0.05


def test_stepwise_planted_effect_survives(stepwise_run):
    payload, trace, _ = stepwise_run
    assert "d_m" in trace["final_terms"]


def test_stepwise_text_report_blocks(panel, capsys):
    code, out, _ = run(capsys, "stepwise", "--data", str(panel["csv"]),
                       "--kind", "attack", "--outcome", "m")
    assert code == 0
    for needle in ("Fixed Effects Estimates", "Random Effects Estimates",
                   "Expert intercept", "Hop intercept", "Residual",
                   "Stepwise trace (alpha = 0.05)", "clean termination:"):
        assert needle in out
    assert "<.001" in out  # the planted d_m effect is overwhelming


def test_stepwise_alpha_flag_forwarded(panel, tmp_path, capsys):
    out = tmp_path / "loose.json"
    code = main(["stepwise", "--data", str(panel["csv"]),
                 "--kind", "attack", "--outcome", "m", "--alpha", "0.2",
                 "--format", "json", "--out", str(out)])
    capsys.readouterr()
    assert code == 0
    assert json.loads(out.read_text())["alpha"] == 0.2


def test_stepwise_reaches_clean_stop_on_simulated_panels(tmp_path, capsys):
    """Backwards elimination ends with every retained effect significant
    in at least 80% of 50 simulated studies at N = 500."""
    clean = 0
    for run_index in range(50):
        spec = {"seed": 9000 + run_index, "n_experts": 25,
                "hops": {"n_attack": 0, "n_evade": 20},
                "true_beta": {"c_m": 0.5, "r_m": 0.4},
                "sd_expert": 0.2, "sd_hop": 0.2, "sd_residual": 0.85}
        spec_path = tmp_path / f"spec{run_index}.json"
        spec_path.write_text(json.dumps(spec))
        sim_dir = tmp_path / f"sim{run_index}"
        assert main(["simulate", "--spec", str(spec_path),
                     "--out", str(sim_dir)]) == 0
        report = tmp_path / f"report{run_index}.json"
        assert main(["stepwise", "--data", str(sim_dir / "panel.csv"),
                     "--kind", "evade", "--outcome", "m",
                     "--format", "json", "--out", str(report)]) == 0
        trace = json.loads(
            (tmp_path / f"report{run_index}.trace.json").read_text())
        clean += trace["clean_termination"]
    capsys.readouterr()
    assert clean >= 40, f"clean termination in only {clean}/50 runs"
