"""Byte-stable tabular output shared by every subcommand.

Floats are printed with 12 significant digits in both CSV and JSON, so the
two variants of a table carry identical values.
"""
from __future__ import annotations

import json
import math
import os
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InputError

FORMATS = ("csv", "json")


def fmt_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.12g}"
    return str(v)


def json_value(v):
    if isinstance(v, float):
        return None if not math.isfinite(v) else float(f"{v:.12g}")
    return v


@dataclass
class Table:
    columns: Sequence[str]
    rows: list[Sequence] = field(default_factory=list)
    comments: list[str] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        lines = [f"# {c}" for c in self.comments]
        lines.append(",".join(self.columns))
        lines += [",".join(_csv_cell(fmt_value(v)) for v in row) for row in self.rows]
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        doc = {k: json_value(v) for k, v in self.meta.items()}
        doc["rows"] = [{c: json_value(v) for c, v in zip(self.columns, row)} for row in self.rows]
        return json.dumps(doc, indent=2) + "\n"


def _csv_cell(text: str) -> str:
    if any(ch in text for ch in ',"\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


def emit_report(table: Table, fmt: str = "csv") -> str:
    if fmt == "csv":
        return table.to_csv()
    if fmt == "json":
        return table.to_json()
    raise ValueError(f"unknown format {fmt!r}; expected csv or json")


def write_text(path: str | os.PathLike, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path
