"""Rendering fitted models in the published table shape.

All formats share one convention set: estimates, standard errors,
t statistics, p values, and random-effect standard deviations are shown
to three decimals with the leading zero stripped (".012", "-.223");
p values below .0005 render as "<.001" and above .9995 as ">.999";
the footer carries N, residual DF, and AIC/BIC to one decimal.

The JSON format carries full-precision numbers and is the round-trip
format: parsing it and re-serializing with dumps_payload() reproduces
the rendered text byte for byte.
"""

from __future__ import annotations

import csv
import io
import json

from .lme import FittedModel
from .stepwise import StepwiseTrace

__all__ = [
    "REPORT_FORMATS",
    "model_payload",
    "dumps_payload",
    "render_model",
]

REPORT_FORMATS = ("text", "markdown", "csv", "json")

_OUTCOME_NAMES = {"m": "overall midpoint", "w": "overall width"}


def _fmt3(value: float) -> str:
    """Three decimals, leading zero stripped, negative zero normalized."""
    text = f"{float(value):.3f}"
    if text == "-0.000":
        text = "0.000"
    if text.startswith("0."):
        return text[1:]
    if text.startswith("-0."):
        return "-" + text[2:]
    return text


def _fmt_p(p: float) -> str:
    if p < 0.0005:
        return "<.001"
    if p >= 0.9995:
        return ">.999"
    return _fmt3(p)


def _footer(payload: dict) -> str:
    return (f"N = {payload['n']}, DF = {payload['df']}, "
            f"AIC = {payload['aic']:.1f}, BIC={payload['bic']:.1f}")


def model_payload(
    model: FittedModel,
    kind: str,
    outcome: str,
    alpha: float | None = None,
    trace: StepwiseTrace | None = None,
) -> dict:
    """Full-precision structured form of a report; the JSON body."""
    payload = {
        "report": "model",
        "kind": kind,
        "outcome": outcome,
        "fixed_effects": [
            {
                "key": term.key,
                "label": term.label,
                "beta": float(model.beta[j]),
                "se": float(model.se[j]),
                "t": float(model.t[j]),
                "p": float(model.p[j]),
            }
            for j, term in enumerate(model.terms)
        ],
        "random_effects": {
            "expert_sd": model.vc.sd_expert,
            "hop_sd": model.vc.sd_hop,
            "residual_sd": model.vc.sd_residual,
        },
        "n": model.n,
        "df": model.df_residual,
        "minus2ll": model.minus2ll,
        "aic": model.aic,
        "bic": model.bic,
        "k_params": model.k_params,
        "converged": model.converged,
    }
    if alpha is not None:
        payload["alpha"] = alpha
    if trace is not None:
        payload["stepwise"] = trace.to_dict()
    return payload


def dumps_payload(payload: dict) -> str:
    """Canonical JSON serialization; json.loads() inverts it exactly."""
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _random_rows(payload: dict) -> list:
    random = payload["random_effects"]
    return [
        ("Expert intercept", random["expert_sd"]),
        ("Hop intercept", random["hop_sd"]),
        ("Residual", random["residual_sd"]),
    ]


def _trace_lines(payload: dict) -> list:
    trace = payload.get("stepwise")
    if trace is None:
        return []
    lines = ["", f"Stepwise trace (alpha = {payload.get('alpha', 0.05):g})"]
    for it in trace["iterations"]:
        lines.append(
            f"  {it['iteration']:>3}. {it['decision']:<9} "
            f"{it['candidate_label']}"
            f"  (t = {_fmt3(it['candidate_t'])}, p = {_fmt_p(it['candidate_p'])};"
            f" LR p = {_fmt_p(it['lr_p'])};"
            f" BIC {it['bic_current']:.1f} -> {it['bic_reduced']:.1f})"
        )
    removed = len(trace["removed"])
    protected = len(trace["protected"])
    clean = "yes" if trace["clean_termination"] else "no"
    lines.append(f"  {removed} removed, {protected} protected; "
                 f"clean termination: {clean}")
    return lines


def _render_text(payload: dict) -> str:
    rows = payload["fixed_effects"]
    label_width = max(
        [len("Fixed Effects Estimates"), len("Random Effects Estimates")]
        + [len(r["label"]) for r in rows]
    )
    num = 8

    def line(label, *cells):
        return label.ljust(label_width) + "".join(c.rjust(num) for c in cells)

    outcome = _OUTCOME_NAMES[payload["outcome"]]
    lines = [f"{payload['kind'].capitalize()} hops — "
             f"outcome {payload['outcome']} ({outcome})", ""]
    lines.append(line("Fixed Effects Estimates", "β", "SE", "t", "p"))
    for r in rows:
        lines.append(line(r["label"], _fmt3(r["beta"]), _fmt3(r["se"]),
                          _fmt3(r["t"]), _fmt_p(r["p"])))
    lines.append("")
    lines.append(line("Random Effects Estimates", "SD"))
    for label, sd in _random_rows(payload):
        lines.append(line(label, _fmt3(sd)))
    lines.append("")
    lines.append(_footer(payload))
    lines.extend(_trace_lines(payload))
    return "\n".join(lines) + "\n"


def _render_markdown(payload: dict) -> str:
    outcome = _OUTCOME_NAMES[payload["outcome"]]
    lines = [f"### {payload['kind'].capitalize()} hops — "
             f"outcome {payload['outcome']} ({outcome})", ""]
    lines.append("| Fixed Effects Estimates | β | SE | t | p |")
    lines.append("|---|---:|---:|---:|---:|")
    for r in payload["fixed_effects"]:
        lines.append(f"| {r['label']} | {_fmt3(r['beta'])} | {_fmt3(r['se'])} "
                     f"| {_fmt3(r['t'])} | {_fmt_p(r['p'])} |")
    lines.append("")
    lines.append("| Random Effects Estimates | SD |")
    lines.append("|---|---:|")
    for label, sd in _random_rows(payload):
        lines.append(f"| {label} | {_fmt3(sd)} |")
    lines.append("")
    lines.append(_footer(payload))
    trace = _trace_lines(payload)
    if trace:
        lines.append("")
        lines.append("```")
        lines.extend(t for t in trace if t)
        lines.append("```")
    return "\n".join(lines) + "\n"


def _render_csv(payload: dict) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["section", "label", "estimate", "se", "t", "p"])
    for r in payload["fixed_effects"]:
        writer.writerow(["fixed", r["label"], _fmt3(r["beta"]),
                         _fmt3(r["se"]), _fmt3(r["t"]), _fmt_p(r["p"])])
    for label, sd in _random_rows(payload):
        writer.writerow(["random", label, _fmt3(sd), "", "", ""])
    for key, value in (("N", payload["n"]), ("DF", payload["df"]),
                       ("AIC", f"{payload['aic']:.1f}"),
                       ("BIC", f"{payload['bic']:.1f}")):
        writer.writerow(["summary", key, value, "", "", ""])
    return buffer.getvalue()


_RENDERERS = {
    "text": _render_text,
    "markdown": _render_markdown,
    "csv": _render_csv,
    "json": dumps_payload,
}


def render_model(
    model: FittedModel,
    kind: str,
    outcome: str,
    fmt: str = "text",
    alpha: float | None = None,
    trace: StepwiseTrace | None = None,
) -> str:
    """Render one fitted model (optionally with its reduction trace)."""
    if fmt not in _RENDERERS:
        raise ValueError(f"unknown report format {fmt!r} "
                         f"(choose from {', '.join(REPORT_FORMATS)})")
    payload = model_payload(model, kind, outcome, alpha=alpha, trace=trace)
    return _RENDERERS[fmt](payload)
