"""Readers for the recperf CSV/JSON table schemas.

Both sweep and comparison tables load into a uniform list-of-dicts shape with
numeric columns converted to float. JSON estimate rows carry their phase
breakdown as an ordered [name, seconds] list; it is flattened into one column
per phase so the two formats are interchangeable downstream.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path


class MissingColumnError(ValueError):
    """Requested metric/column absent from the input table."""

    def __init__(self, column: str, available: list[str]):
        super().__init__(f"missing column {column!r}; available: {', '.join(sorted(available))}")
        self.column = column


class RaggedGridError(ValueError):
    """Heatmap input is not a complete latency x bandwidth rectangle."""


def _coerce(value):
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return value
    return value


def _flatten(row: dict) -> dict:
    flat = {}
    for key, value in row.items():
        if key == "breakdown" and isinstance(value, list):
            for name, seconds in value:
                flat[name] = float(seconds)
        else:
            flat[key] = _coerce(value)
    return flat


def parse_rows(text: str) -> list[dict]:
    stripped = text.lstrip()
    if stripped.startswith("[") or stripped.startswith("{"):
        doc = json.loads(text)
        rows = doc if isinstance(doc, list) else [doc]
        return [_flatten(row) for row in rows]
    reader = csv.DictReader(io.StringIO(text))
    rows = [_flatten(row) for row in reader]
    if not rows:
        raise ValueError("input table is empty")
    return rows


def load_rows(path: str | Path) -> list[dict]:
    return parse_rows(Path(path).read_text())


def require_column(rows: list[dict], column: str) -> None:
    if not rows or column not in rows[0]:
        raise MissingColumnError(column, list(rows[0].keys()) if rows else [])


def column(rows: list[dict], name: str) -> list:
    require_column(rows, name)
    return [row[name] for row in rows]
