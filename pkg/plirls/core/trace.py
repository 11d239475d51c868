"""Trace serialization: CSV with a fixed header, JSON array of records."""

__copyright__ = "Copyright (c) 2024 Cisco and/or its affiliates."
__license__ = "Cisco Sample Code License, Version 1.1"

import csv
import io
import json
import math
from dataclasses import asdict
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

from plirls.config.config import c
from plirls.core.solver import IterationRecord
from plirls.funcs import PathLike, format_float


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return format_float(value)


def trace_columns(records: Sequence[IterationRecord], verbose: bool = False) -> List[str]:
    multiblock = any(r.step_norm_X is not None for r in records)
    columns = list(c.MULTIBLOCK_TRACE_COLUMNS if multiblock else c.TRACE_COLUMNS)
    if verbose:
        columns.append("w_norm_stated")
    return columns


def trace_to_csv_text(records: Sequence[IterationRecord], columns: Optional[List[str]] = None) -> str:
    columns = columns or trace_columns(records)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for record in records:
        row = asdict(record)
        writer.writerow([_cell(row[name]) for name in columns])
    return buffer.getvalue()


def write_trace_csv(path: PathLike, records: Sequence[IterationRecord], columns: Optional[List[str]] = None):
    Path(path).write_text(trace_to_csv_text(records, columns), encoding="utf-8")


def _json_value(value):
    # inf and nan are not JSON; they become null
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def trace_to_json_text(records: Sequence[IterationRecord], columns: Optional[List[str]] = None) -> str:
    columns = columns or trace_columns(records)
    rows = []
    for record in records:
        row = asdict(record)
        rows.append({name: _json_value(row[name]) for name in columns})
    return json.dumps(rows, indent=1) + "\n"


def write_trace_json(path: PathLike, records: Sequence[IterationRecord], columns: Optional[List[str]] = None):
    Path(path).write_text(trace_to_json_text(records, columns), encoding="utf-8")


def read_trace(path: PathLike) -> List[Dict[str, Optional[float]]]:
    """Read a CSV or JSON trace back as a list of dicts of floats (None for empty cells)."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        return [{k: (None if v is None else float(v)) for k, v in row.items()}
                for row in json.loads(path.read_text(encoding="utf-8"))]
    with path.open(newline="", encoding="utf-8") as handle:
        return [{k: (float(v) if v != "" else None) for k, v in row.items()} for row in csv.DictReader(handle)]


def plot_data_text(rows: Iterable[Dict[str, Optional[float]]]) -> str:
    """Whitespace-separated 'k objective w_norm' columns, ready for gnuplot."""
    lines = ["# k objective w_norm"]
    for row in rows:
        values = [row["objective"], row["w_norm"]]
        lines.append(" ".join([str(int(row["k"]))] + [format_float(float("nan") if v is None else v) for v in values]))
    return "\n".join(lines) + "\n"
