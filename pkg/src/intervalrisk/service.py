"""HTTP collection back end for interval-response studies.

Serves the study configuration to browser clients and persists
submitted batches of interval judgements to an append-only JSON-lines
log.  The log is the source of truth: resubmissions append, and the
export endpoint deduplicates latest-wins at read time, mirroring
``domain.assemble_dataset``.

Writes are serialized through a process-wide lock and each batch is
written as a single contiguous block, so concurrent submissions from
distinct experts never interleave within a batch.
"""

from __future__ import annotations

import csv
import io
import json
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Union

from fastapi import Depends, FastAPI, HTTPException, Query, Request, Response
from pydantic import BaseModel, Field

from .domain import StudyConfig, _timestamp_key, check_raw_record

LOG_FILENAME = "responses.jsonl"

EXPORT_COLUMNS = ("expert_id", "hop_id", "hop_type", "attribute",
                  "lower", "upper", "submitted_at")


class SubmissionRecord(BaseModel):
    """One interval judgement inside a batch."""

    hop_id: str
    attribute: str
    # int | float keeps integer endpoints as integers so the stored and
    # exported values are lexically identical to what the client sent.
    lower: Union[int, float]
    upper: Union[int, float]


class SubmissionBatch(BaseModel):
    """Everything one expert submits for one hop (or several)."""

    expert_id: str = Field(min_length=1)
    records: list[SubmissionRecord] = Field(min_length=1)
    client_timestamp: Optional[str] = None


def _server_timestamp() -> str:
    return datetime.now(timezone.utc).isoformat()


def _validate_batch(batch: SubmissionBatch, study: StudyConfig) -> list[dict]:
    """Domain-validate every record; returns per-record error dicts."""
    errors = []
    for index, record in enumerate(batch.records):
        violations = check_raw_record(
            batch.expert_id, record.hop_id, record.attribute,
            record.lower, record.upper, study,
        )
        for violation in violations:
            errors.append({
                "index": index,
                "hop_id": record.hop_id,
                "attribute": record.attribute,
                "error": violation.error,
                "detail": violation.detail,
            })
    return errors


def _read_log(log_path: Path, lock: threading.Lock) -> list[dict]:
    """Parse the append-only log; raises 404 when nothing is there."""
    with lock:
        try:
            text = log_path.read_text(encoding="utf-8")
        except FileNotFoundError:
            text = ""
    records = [json.loads(line) for line in text.splitlines() if line.strip()]
    if not records:
        raise HTTPException(status_code=404, detail="EmptyLog: no responses recorded")
    return records


def _deduplicate(records: list[dict]) -> list[dict]:
    """Latest-wins per (expert, hop, attribute); ties keep the later line."""
    latest: dict = {}
    for record in records:
        key = (record["expert_id"], record["hop_id"], record["attribute"])
        kept = latest.get(key)
        stamp = _timestamp_key(record.get("submitted_at", ""))
        if kept is None or stamp >= kept[1]:
            latest[key] = (record, stamp)
    return [latest[key][0] for key in sorted(latest)]


def create_app(
    study: Optional[StudyConfig],
    data_dir,
    api_token: Optional[str] = None,
) -> FastAPI:
    """Build the service around one study and one data directory.

    ``study=None`` produces a deliberately unconfigured service whose
    endpoints all answer 503 (NoStudyLoaded).  ``api_token``, when set,
    gates submission and export behind a static bearer token; the study
    document itself stays open so the questionnaire can always load.
    """
    app = FastAPI(title="intervalrisk study service", docs_url=None, redoc_url=None)
    data_path = Path(data_dir)
    log_path = data_path / LOG_FILENAME
    lock = threading.Lock()

    def require_study() -> StudyConfig:
        if study is None:
            raise HTTPException(status_code=503,
                                detail="NoStudyLoaded: service has no study configured")
        return study

    def require_token(request: Request) -> None:
        if api_token is None:
            return
        supplied = request.headers.get("authorization", "")
        if supplied != f"Bearer {api_token}":
            raise HTTPException(status_code=401,
                                detail="missing or invalid bearer token")

    @app.get("/api/study")
    def get_study() -> dict:
        return require_study().to_dict()

    @app.post("/api/responses", status_code=201,
              dependencies=[Depends(require_token)])
    def post_responses(batch: SubmissionBatch) -> dict:
        config = require_study()
        errors = _validate_batch(batch, config)
        if errors:
            # Nothing persists: validation runs over the whole batch
            # before any line is written.
            raise HTTPException(status_code=422, detail={"errors": errors})
        stamp = _server_timestamp()
        lines = []
        for record in batch.records:
            lines.append(json.dumps({
                "expert_id": batch.expert_id,
                "hop_id": record.hop_id,
                "attribute": record.attribute,
                "lower": record.lower,
                "upper": record.upper,
                "submitted_at": stamp,
            }, separators=(",", ":")))
        payload = "".join(line + "\n" for line in lines)
        with lock:
            data_path.mkdir(parents=True, exist_ok=True)
            try:
                with open(log_path, "a", encoding="utf-8") as handle:
                    handle.write(payload)
            except OSError as exc:
                raise HTTPException(status_code=500,
                                    detail=f"StorageFailure: {exc}") from exc
        return {"accepted": len(batch.records), "submitted_at": stamp}

    @app.get("/api/export", dependencies=[Depends(require_token)])
    def export_responses(format: str = Query("csv")) -> Response:
        config = require_study()
        if format not in ("csv", "jsonl"):
            raise HTTPException(status_code=422,
                                detail=f"unknown export format {format!r}")
        records = _deduplicate(_read_log(log_path, lock))
        if format == "jsonl":
            body = "".join(
                json.dumps(record, separators=(",", ":")) + "\n"
                for record in records
            )
            return Response(content=body, media_type="application/x-ndjson")
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(EXPORT_COLUMNS)
        for record in records:
            hop_id = record["hop_id"]
            hop_type = config.hop(hop_id).kind if config.has_hop(hop_id) else ""
            writer.writerow([
                record["expert_id"], hop_id, hop_type, record["attribute"],
                record["lower"], record["upper"], record["submitted_at"],
            ])
        return Response(content=buffer.getvalue(), media_type="text/csv")

    return app
