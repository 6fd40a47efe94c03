"""Core domain model for interval-valued expert judgements.

Experts rate system components ("hops") on a 0-100 scale by giving an
interval [lower, upper] per attribute: the midpoint carries the rating,
the width carries the expert's uncertainty.  Attack hops take seven
attributes plus an overall question; evasion hops take three plus
overall.  This module owns the value types, record validation, and the
pivot from flat response records to one-row-per-(expert, hop) panels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime

__all__ = [
    "ATTACK",
    "EVADE",
    "HOP_KINDS",
    "OVERALL",
    "attribute_codes",
    "attribute_name",
    "MalformedInterval",
    "UnknownHop",
    "IllegalAttribute",
    "EmptyDataset",
    "Interval",
    "interval_summaries",
    "HopSpec",
    "StudyConfig",
    "default_study",
    "ResponseRecord",
    "RecordViolation",
    "check_raw_record",
    "validate_record",
    "ObservationRow",
    "Dataset",
    "assemble_dataset",
]

# ---- Hop kinds and attribute catalogue ----

ATTACK = "attack"
EVADE = "evade"
HOP_KINDS = (ATTACK, EVADE)

#: Rated attributes in canonical order, per hop kind.  "o" (overall) is
#: collected alongside but is an outcome, never a predictor.
ATTACK_ATTRIBUTES = ("c", "t", "f", "a", "d", "r", "g")
EVADE_ATTRIBUTES = ("c", "a", "r")
OVERALL = "o"

_ATTRIBUTE_NAMES = {
    (ATTACK, "c"): "Complexity",
    (ATTACK, "t"): "Interaction",
    (ATTACK, "f"): "Frequency",
    (ATTACK, "a"): "Availability Tool",
    (ATTACK, "d"): "Inherent Difficulty",
    (ATTACK, "r"): "Maturity",
    (ATTACK, "g"): "Going Unnoticed",
    (ATTACK, OVERALL): "Overall Difficulty",
    (EVADE, "c"): "Complexity",
    (EVADE, "a"): "Availability Information",
    (EVADE, "r"): "Maturity",
    (EVADE, OVERALL): "Overall Difficulty",
}

# Default per-attribute prompts shown to experts (the instrument text).
_DEFAULT_QUESTIONS = {
    ATTACK: {
        "c": "How complex is the target component (e.g. in terms of size of "
             "code, number of sub-components)?",
        "t": "How much does the target component process/interact with any "
             "data input?",
        "f": "How often would you say this type of attack is reported in the "
             "public domain?",
        "a": "How likely is it that there will be a publicly available tool "
             "that could help with this attack?",
        "d": "How inherently difficult is this type of attack? (i.e. how "
             "technically demanding would it be to do from scratch, with no "
             "tools to help.)",
        "r": "How mature is this type of technology?",
        "g": "How easy is it to carry this attack out without being noticed?",
        OVERALL: "Overall, how difficult would it be for an attacker to do "
                 "this?",
    },
    EVADE: {
        "c": "How complex is the job of providing this kind of defence?",
        "a": "How likely is that there will be publicly available information "
             "that could help with evading defence?",
        "r": "How mature is this type of technology?",
        OVERALL: "Overall, how difficult would it be for an attacker to do "
                 "this?",
    },
}

SCALE_MIN = 0.0
SCALE_MAX = 100.0


def attribute_codes(kind: str, include_overall: bool = False) -> tuple[str, ...]:
    """Canonical attribute order for a hop kind."""
    if kind == ATTACK:
        codes = ATTACK_ATTRIBUTES
    elif kind == EVADE:
        codes = EVADE_ATTRIBUTES
    else:
        raise ValueError(f"unknown hop kind: {kind!r}")
    return codes + (OVERALL,) if include_overall else codes


def attribute_name(kind: str, code: str) -> str:
    """Display name for an attribute code ("f" -> "Frequency")."""
    return _ATTRIBUTE_NAMES[(kind, code)]


# ---- Errors ----

class MalformedInterval(ValueError):
    """Interval endpoints out of order or outside the response scale."""


class UnknownHop(KeyError):
    """Record references a hop_id absent from the study configuration."""


class IllegalAttribute(ValueError):
    """Attribute code is not collected for the hop's kind."""


class EmptyDataset(ValueError):
    """Assembly produced no complete (expert, hop) rows."""


# ---- Interval ----

@dataclass(frozen=True)
class Interval:
    """A closed interval on the response scale.

    Constructing an Interval validates it: 0 <= lower <= upper <= 100.
    Degenerate (point) intervals are legal and mean "certain".
    """

    lower: float
    upper: float

    def __post_init__(self):
        lo, hi = float(self.lower), float(self.upper)
        if not (lo <= hi):
            raise MalformedInterval(f"lower {lo!r} exceeds upper {hi!r}")
        if lo < SCALE_MIN or hi > SCALE_MAX:
            raise MalformedInterval(
                f"[{lo!r}, {hi!r}] outside scale [{SCALE_MIN:g}, {SCALE_MAX:g}]"
            )
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def midpoint(self) -> float:
        return (self.lower + self.upper) / 2.0

    @property
    def width(self) -> float:
        return self.upper - self.lower


def interval_summaries(interval: Interval) -> tuple[float, float]:
    """(midpoint, width) of a validated interval."""
    return interval.midpoint, interval.width


# ---- Study configuration ----

@dataclass(frozen=True)
class HopSpec:
    """One system component under study."""

    hop_id: str
    name: str
    kind: str  # "attack" or "evade"

    def __post_init__(self):
        if self.kind not in HOP_KINDS:
            raise ValueError(f"unknown hop kind: {self.kind!r}")


@dataclass(frozen=True)
class StudyConfig:
    """The instrument: which hops are rated and with which prompts.

    scale bounds are configurable per study but must sit inside the
    canonical [0, 100] response scale (and default to exactly that).
    """

    study_id: str
    hops: tuple[HopSpec, ...]
    scale_min: float = SCALE_MIN
    scale_max: float = SCALE_MAX
    # questions[kind][code] -> prompt text; defaults to the standard set.
    questions: dict = field(default_factory=lambda: _copy_default_questions())

    def __post_init__(self):
        if not (SCALE_MIN <= self.scale_min < self.scale_max <= SCALE_MAX):
            raise ValueError(
                f"scale [{self.scale_min!r}, {self.scale_max!r}] must be an "
                f"ordered sub-range of [{SCALE_MIN:g}, {SCALE_MAX:g}]"
            )
        seen = set()
        for hop in self.hops:
            if hop.hop_id in seen:
                raise ValueError(f"duplicate hop_id: {hop.hop_id!r}")
            seen.add(hop.hop_id)

    def hop(self, hop_id: str) -> HopSpec:
        for h in self.hops:
            if h.hop_id == hop_id:
                return h
        raise UnknownHop(hop_id)

    def has_hop(self, hop_id: str) -> bool:
        return any(h.hop_id == hop_id for h in self.hops)

    def question(self, kind: str, code: str) -> str:
        return self.questions[kind][code]

    def to_dict(self) -> dict:
        return {
            "study_id": self.study_id,
            "scale_min": self.scale_min,
            "scale_max": self.scale_max,
            "hops": [
                {"hop_id": h.hop_id, "name": h.name, "kind": h.kind}
                for h in self.hops
            ],
            "questions": {k: dict(v) for k, v in self.questions.items()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StudyConfig":
        questions = _copy_default_questions()
        for kind, qs in data.get("questions", {}).items():
            questions.setdefault(kind, {}).update(qs)
        return cls(
            study_id=data["study_id"],
            hops=tuple(
                HopSpec(h["hop_id"], h.get("name", h["hop_id"]), h["kind"])
                for h in data.get("hops", [])
            ),
            scale_min=float(data.get("scale_min", SCALE_MIN)),
            scale_max=float(data.get("scale_max", SCALE_MAX)),
            questions=questions,
        )

    @classmethod
    def from_json(cls, text: str) -> "StudyConfig":
        return cls.from_dict(json.loads(text))


def _copy_default_questions() -> dict:
    return {kind: dict(qs) for kind, qs in _DEFAULT_QUESTIONS.items()}


def default_study() -> StudyConfig:
    """A small built-in study usable out of the box."""
    return StudyConfig(
        study_id="default",
        hops=(
            HopSpec("A01", "overcome client lockdown", ATTACK),
            HopSpec("A02", "compromise web application server", ATTACK),
            HopSpec("A03", "exploit internal database server", ATTACK),
            HopSpec("V01", "bypass gateway content checker", EVADE),
            HopSpec("V02", "evade network intrusion detection", EVADE),
        ),
    )


# ---- Response records ----

@dataclass(frozen=True)
class ResponseRecord:
    """One expert's interval for one attribute of one hop."""

    expert_id: str
    hop_id: str
    attribute: str
    interval: Interval
    submitted_at: str  # ISO-8601 timestamp, assigned by the capture service


@dataclass(frozen=True)
class RecordViolation:
    """A single validation failure, suitable for user-facing reports."""

    error: str    # error class name, e.g. "MalformedInterval"
    detail: str


def check_raw_record(
    expert_id,
    hop_id,
    attribute,
    lower,
    upper,
    config: StudyConfig,
) -> list[RecordViolation]:
    """Validate raw field values before any Interval is constructed.

    Returns all violations found (empty list means acceptable).  Used by
    the capture service and file readers, which must report problems
    rather than raise on the first bad field.
    """
    violations = []
    kind = None
    if not config.has_hop(str(hop_id)):
        violations.append(
            RecordViolation("UnknownHop", f"hop_id {hop_id!r} not in study "
                                          f"{config.study_id!r}")
        )
    else:
        kind = config.hop(str(hop_id)).kind
    if kind is not None:
        legal = attribute_codes(kind, include_overall=True)
        if attribute not in legal:
            violations.append(
                RecordViolation(
                    "IllegalAttribute",
                    f"attribute {attribute!r} not collected for {kind} hops "
                    f"(legal: {', '.join(legal)})",
                )
            )
    try:
        lo, hi = float(lower), float(upper)
    except (TypeError, ValueError):
        violations.append(
            RecordViolation("MalformedInterval",
                            f"endpoints not numeric: ({lower!r}, {upper!r})")
        )
        return violations
    if not (lo <= hi):
        violations.append(
            RecordViolation("MalformedInterval",
                            f"lower {lo:g} exceeds upper {hi:g}")
        )
    elif lo < config.scale_min or hi > config.scale_max:
        violations.append(
            RecordViolation(
                "MalformedInterval",
                f"[{lo:g}, {hi:g}] outside scale "
                f"[{config.scale_min:g}, {config.scale_max:g}]",
            )
        )
    return violations


def validate_record(record: ResponseRecord, config: StudyConfig) -> None:
    """Raise the first violation for an already-constructed record."""
    for v in check_raw_record(
        record.expert_id,
        record.hop_id,
        record.attribute,
        record.interval.lower,
        record.interval.upper,
        config,
    ):
        raise {
            "UnknownHop": UnknownHop,
            "IllegalAttribute": IllegalAttribute,
            "MalformedInterval": MalformedInterval,
        }[v.error](v.detail)


# ---- Panel assembly ----

@dataclass(frozen=True)
class ObservationRow:
    """All midpoint/width summaries for one (expert, hop) pair.

    Complete by construction: every attribute of the hop's kind plus the
    overall question is present.
    """

    expert_id: str
    hop_id: str
    kind: str
    midpoints: dict  # attribute code (incl. "o") -> midpoint
    widths: dict     # attribute code (incl. "o") -> width

    def __post_init__(self):
        required = set(attribute_codes(self.kind, include_overall=True))
        have = set(self.midpoints)
        if have != required or set(self.widths) != required:
            missing = sorted(required - have) + sorted(required - set(self.widths))
            raise ValueError(f"incomplete row {self.expert_id}/{self.hop_id}: "
                             f"missing {missing}")


@dataclass(frozen=True)
class Dataset:
    """A complete-case panel of one hop kind, ready for analysis."""

    kind: str
    rows: tuple[ObservationRow, ...]

    def __post_init__(self):
        if not self.rows:
            raise EmptyDataset("dataset has no rows")
        for row in self.rows:
            if row.kind != self.kind:
                raise ValueError(f"row {row.expert_id}/{row.hop_id} has kind "
                                 f"{row.kind!r}, dataset is {self.kind!r}")

    @property
    def n(self) -> int:
        return len(self.rows)

    def to_records(self, submitted_at: str = "1970-01-01T00:00:00+00:00"
                   ) -> list[ResponseRecord]:
        """Flatten back to one record per (expert, hop, attribute).

        Endpoints are clamped to the scale to absorb the ulp of float
        error that midpoint/width reconstruction can introduce.
        """
        records = []
        for row in self.rows:
            for code in attribute_codes(self.kind, include_overall=True):
                m, w = row.midpoints[code], row.widths[code]
                lo = min(max(m - w / 2.0, SCALE_MIN), SCALE_MAX)
                hi = min(max(m + w / 2.0, SCALE_MIN), SCALE_MAX)
                records.append(ResponseRecord(
                    expert_id=row.expert_id,
                    hop_id=row.hop_id,
                    attribute=code,
                    interval=Interval(lo, max(lo, hi)),
                    submitted_at=submitted_at,
                ))
        return records


def _timestamp_key(stamp: str) -> float:
    """Epoch-seconds key for ISO-8601 timestamps; tolerant of trailing 'Z'.

    Unparseable stamps sort first, so anything with a real timestamp
    beats them in latest-wins deduplication.
    """
    try:
        parsed = datetime.fromisoformat(str(stamp).replace("Z", "+00:00"))
    except ValueError:
        return float("-inf")
    try:
        return parsed.timestamp()
    except (OverflowError, OSError):
        return float("-inf")


def assemble_dataset(records, config: StudyConfig, kind: str) -> Dataset:
    """Pivot flat records into a complete-case panel for one hop kind.

    Resubmissions are resolved latest-wins per (expert, hop, attribute)
    key: later submitted_at wins, with position in the input breaking
    ties, so re-running on already-deduplicated data is a no-op.  Rows
    missing any attribute (or the overall question) are dropped whole.
    Rows are sorted by (expert_id, hop_id).

    Raises EmptyDataset when nothing complete remains.
    """
    if kind not in HOP_KINDS:
        raise ValueError(f"unknown hop kind: {kind!r}")
    # Latest-wins per key; >= keeps the later input position on ties.
    latest: dict = {}
    for record in records:
        validate_record(record, config)
        if config.hop(record.hop_id).kind != kind:
            continue
        key = (record.expert_id, record.hop_id, record.attribute)
        kept = latest.get(key)
        if kept is None or _timestamp_key(record.submitted_at) >= kept[1]:
            latest[key] = (record, _timestamp_key(record.submitted_at))

    by_pair: dict = {}
    for (expert_id, hop_id, attribute), (record, _) in latest.items():
        by_pair.setdefault((expert_id, hop_id), {})[attribute] = record.interval

    required = set(attribute_codes(kind, include_overall=True))
    rows = []
    for (expert_id, hop_id) in sorted(by_pair):
        intervals = by_pair[(expert_id, hop_id)]
        if set(intervals) != required:
            continue  # incomplete case
        rows.append(ObservationRow(
            expert_id=expert_id,
            hop_id=hop_id,
            kind=kind,
            midpoints={c: intervals[c].midpoint for c in required},
            widths={c: intervals[c].width for c in required},
        ))
    if not rows:
        raise EmptyDataset(f"no complete {kind} rows after assembly")
    return Dataset(kind=kind, rows=tuple(rows))
