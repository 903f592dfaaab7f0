"""
Result writers.

Every run ends with a single call to :func:`write_results`; nothing else touches
the output directory.

:copyright: (c) 2025-2026 by the cosmic-mu developers.
:license: MPL-2.0, see LICENSE for more details.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from cosmic_mu.config import OutputFormat

_LOG = logging.getLogger(__name__)

Row = Mapping[str, Any]


@dataclass
class RunOutput:
    """Everything a scenario produces: one summary, named tables and named JSON documents."""

    summary: dict[str, Any]
    tables: dict[str, list[Row]] = field(default_factory=dict)
    documents: dict[str, dict[str, Any]] = field(default_factory=dict)


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _plain(value: Any) -> Any:
    """JSON-safe copy: tuples become lists, non-finite floats become null."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if hasattr(value, "item"):
        return _plain(value.item())
    return value


def dumps(document: Any) -> str:
    return json.dumps(_plain(document), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_csv(path: Path, rows: Sequence[Row]) -> None:
    columns = list(rows[0].keys()) if rows else []
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row[c]) for c in columns])


def write_results(output: RunOutput, directory: str | Path, fmt: OutputFormat = OutputFormat.CSV) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []

    path = directory / "summary.json"
    path.write_text(dumps(output.summary), encoding="utf-8")
    written.append(path)

    for name, rows in sorted(output.tables.items()):
        if OutputFormat(fmt) is OutputFormat.CSV:
            path = directory / f"{name}.csv"
            write_csv(path, rows)
        else:
            path = directory / f"{name}.json"
            path.write_text(dumps(list(rows)), encoding="utf-8")
        written.append(path)

    for name, document in sorted(output.documents.items()):
        path = directory / f"{name}.json"
        path.write_text(dumps(document), encoding="utf-8")
        written.append(path)

    for path in written:
        _LOG.info("Wrote %s", path)
    return written
