"""Deterministic CSV and JSON output.

Every file starts with its schema version and embeds the run configuration.
Floats are written with 17 significant digits (CSV) or as their shortest
round-trip representation (JSON); NaN becomes an empty CSV cell or ``null``.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np

from .config import RunConfig
from .sweeps import SweepRecord

logger = logging.getLogger(__name__)

CSV_SCHEMA = "fluxspec-sweep/1"
JSON_SCHEMA = "fluxspec-report/1"
SWEEP_HEADER = (
    "domain_id",
    "c",
    "f_value",
    "boundary_integral",
    "boundary_min",
    "residual",
    "guard_band_hit",
)


def _format_float(value: float) -> str:
    if math.isnan(value):
        return ""
    return f"{value:.17g}"


def _config_line(config: RunConfig) -> str:
    return json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))


def sweep_csv(records: Iterable[SweepRecord], config: RunConfig) -> str:
    """Render sweep records as CSV text with schema and config comment lines."""

    buffer = io.StringIO()
    buffer.write(f"# schema: {CSV_SCHEMA}\n")
    buffer.write(f"# config: {_config_line(config)}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for record in records:
        writer.writerow(
            [
                record.domain_id,
                _format_float(record.c),
                _format_float(record.f_value),
                _format_float(record.boundary_integral),
                _format_float(record.boundary_min),
                _format_float(record.residual),
                "true" if record.guard_band_hit else "false",
            ]
        )
    return buffer.getvalue()


def to_jsonable(value: Any) -> Any:
    """Convert dataclasses, numpy values and NaN into plain JSON values."""

    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {
            item.name: to_jsonable(getattr(value, item.name))
            for item in dataclasses.fields(value)
            if not item.name.startswith("_")
        }
    if isinstance(value, Mapping):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, np.ndarray):
        return [to_jsonable(item) for item in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.generic):
        return to_jsonable(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def report_json(kind: str, payload: Any, config: RunConfig) -> str:
    """Render ``payload`` as a JSON document tagged with schema, kind and config."""

    document = {
        "schema": JSON_SCHEMA,
        "kind": kind,
        "config": config.to_dict(),
        "result": to_jsonable(payload),
    }
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.info("Wrote %s", path)
    return path
