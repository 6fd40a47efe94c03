"""Command-line front end for the interval-response pipeline.

Subcommands
-----------
validate   check a response file against a study; report every violation
simulate   generate a synthetic panel plus ground-truth sidecar
fit        fit the full (all-terms) model and render the report
stepwise   run backwards elimination and render the final model + trace
serve      launch the HTTP collection service

The (kind, outcome) pairs — attack/evade × m/w — are the four separate
analyses the pipeline supports; fit and stepwise run exactly one pair
per invocation and touch the data read-only.

Exit codes: 0 success; 1 data or validation failure; 2 fitting failure;
3 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from .design import DegenerateVariable, build_design, standardize
from .domain import (
    EmptyDataset,
    HOP_KINDS,
    HopSpec,
    Interval,
    ResponseRecord,
    StudyConfig,
    check_raw_record,
    default_study,
)
from .lme import NonConvergence, SingularDesign, fit_ml
from .report import REPORT_FORMATS, render_model
from .simulate import (
    InfeasibleSpec,
    SimulationSpec,
    generate_panel,
    make_hops,
    study_for_spec,
    truth_metadata,
)
from .stepwise import IterationCapExceeded, StepwiseConfig, reduce

PANEL_COLUMNS = ("expert_id", "hop_id", "hop_type", "attribute",
                 "lower", "upper", "submitted_at")


class UsageError(Exception):
    """Bad command line; exit code 3."""


class DataError(Exception):
    """Unreadable or invalid input data; exit code 1."""


class FitError(Exception):
    """Model could not be estimated; exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); we want code 3
        raise UsageError(message)


# ---- Input readers ----

def _load_study(path: str | None) -> StudyConfig | None:
    if path is None:
        return None
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read study file {path}: {exc}") from exc
    try:
        return StudyConfig.from_json(text)
    except (ValueError, KeyError, TypeError) as exc:
        raise DataError(f"{path}: invalid study config: {exc}") from exc


def _read_panel(path: str, study: StudyConfig | None):
    """Read a CSV or JSONL response file.

    Returns (records, problems, config): validated ResponseRecords, a
    list of (line_number, code, detail) problems, and the study config
    used (derived from CSV hop_type columns when no study is supplied).
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read data file {path}: {exc}") from exc
    if path.endswith((".jsonl", ".ndjson")):
        if study is None:
            raise DataError(f"{path}: --study is required for JSONL input "
                            "(records carry no hop_type)")
        return _parse_jsonl(text, study)
    return _parse_csv(text, study, path)


def _parse_jsonl(text: str, study: StudyConfig):
    rows = []
    problems = []
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            problems.append((number, "ParseError", str(exc)))
            continue
        if not isinstance(raw, dict):
            problems.append((number, "ParseError", "record is not an object"))
            continue
        rows.append((number, raw))
    records = _validate_rows(rows, study, problems)
    return records, problems, study


def _parse_csv(text: str, study: StudyConfig | None, path: str):
    reader = csv.DictReader(_iter_lines(text))
    header = reader.fieldnames or []
    required = {"expert_id", "hop_id", "attribute", "lower", "upper"}
    missing = sorted(required - set(header))
    if missing:
        raise DataError(f"{path}: missing CSV columns: {', '.join(missing)}")
    if study is None and "hop_type" not in header:
        raise DataError(f"{path}: --study is required when the CSV has no "
                        "hop_type column")

    rows = []
    problems = []
    derived: dict = {}
    for raw in reader:
        number = reader.line_num
        if raw.get(None) is not None:
            problems.append((number, "ParseError",
                             f"row has {len(header) + len(raw[None])} fields, "
                             f"expected {len(header)}"))
            continue
        if study is None:
            hop_id, hop_type = raw.get("hop_id", ""), raw.get("hop_type", "")
            if hop_type not in HOP_KINDS:
                problems.append((number, "ParseError",
                                 f"hop_type {hop_type!r} is not one of "
                                 f"{', '.join(HOP_KINDS)}"))
                continue
            if derived.setdefault(hop_id, hop_type) != hop_type:
                problems.append((number, "InconsistentHopType",
                                 f"hop {hop_id!r} previously seen as "
                                 f"{derived[hop_id]!r}, now {hop_type!r}"))
                continue
        rows.append((number, raw))

    config = study
    if config is None:
        config = StudyConfig(
            study_id="derived-from-csv",
            hops=tuple(HopSpec(hop_id, hop_id, kind)
                       for hop_id, kind in sorted(derived.items())),
        )
    records = _validate_rows(rows, config, problems)
    return records, problems, config


def _iter_lines(text: str):
    """Line iterator that keeps csv's line counting exact."""
    return iter(text.splitlines(keepends=True))


def _validate_rows(rows, config: StudyConfig, problems: list):
    """Domain-check raw rows; append violations, return clean records."""
    records = []
    for number, raw in rows:
        violations = check_raw_record(
            raw.get("expert_id", ""), raw.get("hop_id", ""),
            raw.get("attribute", ""), raw.get("lower"), raw.get("upper"),
            config,
        )
        if violations:
            for v in violations:
                problems.append((number, v.error, v.detail))
            continue
        records.append(ResponseRecord(
            expert_id=str(raw.get("expert_id", "")),
            hop_id=str(raw.get("hop_id", "")),
            attribute=str(raw.get("attribute", "")),
            interval=Interval(float(raw["lower"]), float(raw["upper"])),
            submitted_at=str(raw.get("submitted_at", "")),
        ))
    return records


def _require_clean(problems, path: str):
    if problems:
        number, code, detail = problems[0]
        more = f" (+{len(problems) - 1} more)" if len(problems) > 1 else ""
        raise DataError(f"{path}:{number}: {code}: {detail}{more}")


# ---- Analysis plumbing ----

def _assemble(records, config, kind, path):
    from .domain import assemble_dataset
    try:
        return assemble_dataset(records, config, kind)
    except EmptyDataset as exc:
        raise DataError(f"{path}: {exc}") from exc


def _design_for(args, records, config, path):
    dataset = _assemble(records, config, args.kind, path)
    try:
        standardized, _ = standardize(dataset)
        return build_design(standardized, args.outcome)
    except DegenerateVariable as exc:
        raise FitError(str(exc)) from exc


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


# ---- Subcommands ----

def cmd_validate(args) -> int:
    study = _load_study(args.study)
    records, problems, config = _read_panel(args.data, study)

    counts = {}
    for kind in HOP_KINDS:
        try:
            counts[kind] = _assemble(records, config, kind, args.data).n
        except DataError:
            counts[kind] = 0

    lines = []
    for number, code, detail in problems:
        lines.append(f"{args.data}:{number}: {code}: {detail}")
    lines.append(f"{len(problems)} violation(s) in {args.data}")
    lines.append(f"complete cases: attack {counts['attack']}, "
                 f"evade {counts['evade']}")
    _emit("\n".join(lines) + "\n", args.out)
    return 1 if problems else 0


def _spec_from_file(path: str, seed_override: int | None) -> SimulationSpec:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read spec file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from exc

    hops_field = raw.get("hops")
    if isinstance(hops_field, dict):
        hops = make_hops(int(hops_field.get("n_attack", 0)),
                         int(hops_field.get("n_evade", 0)))
    elif isinstance(hops_field, list):
        hops = tuple(HopSpec(h["hop_id"], h.get("name", h["hop_id"]),
                             h["kind"]) for h in hops_field)
    else:
        raise DataError(f"{path}: 'hops' must be a list of hop objects or "
                        "{'n_attack': ..., 'n_evade': ...}")
    try:
        return SimulationSpec(
            seed=int(raw["seed"]) if seed_override is None else seed_override,
            n_experts=int(raw["n_experts"]),
            hops=hops,
            true_beta=dict(raw.get("true_beta", {})),
            sd_expert=float(raw.get("sd_expert", 0.0)),
            sd_hop=float(raw.get("sd_hop", 0.0)),
            sd_residual=float(raw.get("sd_residual", 0.0)),
            midpoint_range=tuple(raw.get("midpoint_range", (10.0, 90.0))),
        )
    except KeyError as exc:
        raise DataError(f"{path}: spec is missing required field {exc}") from exc


def cmd_simulate(args) -> int:
    spec = _spec_from_file(args.spec, args.seed)
    study = study_for_spec(spec)
    records = generate_panel(spec)

    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.format == "jsonl":
        lines = [json.dumps({
            "expert_id": r.expert_id, "hop_id": r.hop_id,
            "attribute": r.attribute, "lower": r.interval.lower,
            "upper": r.interval.upper, "submitted_at": r.submitted_at,
        }, separators=(",", ":")) for r in records]
        panel_path = out_dir / "panel.jsonl"
        panel_path.write_text("".join(line + "\n" for line in lines),
                              encoding="utf-8")
    else:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(PANEL_COLUMNS)
        for r in records:
            writer.writerow([r.expert_id, r.hop_id,
                             study.hop(r.hop_id).kind, r.attribute,
                             r.interval.lower, r.interval.upper,
                             r.submitted_at])
        panel_path = out_dir / "panel.csv"
        panel_path.write_text(buffer.getvalue(), encoding="utf-8")

    (out_dir / "truth.json").write_text(
        json.dumps(truth_metadata(spec), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    (out_dir / "study.json").write_text(
        json.dumps(study.to_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    sys.stdout.write(f"wrote {panel_path} ({len(records)} records), "
                     f"truth.json, study.json\n")
    return 0


def cmd_fit(args) -> int:
    study = _load_study(args.study)
    records, problems, config = _read_panel(args.data, study)
    _require_clean(problems, args.data)
    design = _design_for(args, records, config, args.data)
    try:
        model = fit_ml(design)
    except (SingularDesign, NonConvergence) as exc:
        raise FitError(str(exc)) from exc
    _emit(render_model(model, args.kind, args.outcome, fmt=args.format),
          args.out)
    return 0


def cmd_stepwise(args) -> int:
    study = _load_study(args.study)
    records, problems, config = _read_panel(args.data, study)
    _require_clean(problems, args.data)
    design = _design_for(args, records, config, args.data)
    try:
        trace = reduce(design, config=StepwiseConfig(alpha=args.alpha))
    except (SingularDesign, NonConvergence, IterationCapExceeded) as exc:
        raise FitError(str(exc)) from exc
    rendered = render_model(trace.final_model, args.kind, args.outcome,
                            fmt=args.format, alpha=args.alpha, trace=trace)
    _emit(rendered, args.out)
    if args.out is not None:
        trace_path = Path(args.out).with_name(Path(args.out).stem
                                              + ".trace.json")
        trace_path.write_text(
            json.dumps(trace.to_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8")
    return 0


def cmd_serve(args) -> int:
    from .service import create_app
    study = _load_study(args.study) if args.study else default_study()
    app = create_app(study, args.data,
                     api_token=args.token or os.environ.get("API_TOKEN"))
    import uvicorn
    port = args.port or int(os.environ.get("PORT", "8000"))
    uvicorn.run(app, host=args.host, port=port, log_level="warning")
    return 0


# ---- Parser ----

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="intervalrisk",
                     description="Interval-valued expert judgement pipeline")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def add_data_args(p, need_analysis):
        p.add_argument("--data", required=True,
                       help="response file (.csv or .jsonl)")
        p.add_argument("--study", help="study config JSON")
        if need_analysis:
            p.add_argument("--kind", choices=HOP_KINDS, required=True)
            p.add_argument("--outcome", choices=("m", "w"), required=True)
            p.add_argument("--format", choices=REPORT_FORMATS,
                           default="text")
        p.add_argument("--out", help="write output here instead of stdout")

    p_validate = sub.add_parser("validate", help="check a response file")
    add_data_args(p_validate, need_analysis=False)
    p_validate.set_defaults(func=cmd_validate)

    p_simulate = sub.add_parser("simulate", help="generate a synthetic panel")
    p_simulate.add_argument("--spec", required=True,
                            help="simulation spec JSON")
    p_simulate.add_argument("--out", help="output directory (default: .)")
    p_simulate.add_argument("--seed", type=int,
                            help="override the spec's seed")
    p_simulate.add_argument("--format", choices=("csv", "jsonl"),
                            default="csv")
    p_simulate.set_defaults(func=cmd_simulate)

    p_fit = sub.add_parser("fit", help="fit the full model")
    add_data_args(p_fit, need_analysis=True)
    p_fit.set_defaults(func=cmd_fit)

    p_step = sub.add_parser("stepwise", help="backwards elimination")
    add_data_args(p_step, need_analysis=True)
    p_step.add_argument("--alpha", type=float, default=0.05)
    p_step.set_defaults(func=cmd_stepwise)

    p_serve = sub.add_parser("serve", help="run the collection service")
    p_serve.add_argument("--study", help="study config JSON "
                                         "(default: built-in study)")
    p_serve.add_argument("--data", default=os.environ.get("DATA_DIR", "data"),
                         help="data directory for the response log")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int)
    p_serve.add_argument("--token", help="bearer token for POST and export")
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 3
    except (DataError, InfeasibleSpec) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except FitError as exc:
        sys.stderr.write(f"fit error: {exc}\n")
        return 2
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
