"""Tabular results and their CSV/JSON serialization."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

TRACE_COLUMNS = (
    "run_id", "t", "position", "action", "reward",
    "pseudo_regret", "cum_pseudo_regret", "realized_regret", "phase",
)
AGGREGATE_COLUMNS = ("series_id", "t", "mean", "median", "q25", "q75", "n_runs")
NAV_SWEEP_COLUMNS = ("p", "n", "runs", "min", "q25", "median", "q75", "max", "censored_count")


class ExportError(OSError):
    pass


@dataclass
class Table:
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)

    def __post_init__(self):
        self.columns = tuple(self.columns)

    def append(self, *values) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} values, table has {len(self.columns)} columns")
        self.rows.append(tuple(values))

    def column(self, name: str) -> list:
        j = self.columns.index(name)
        return [r[j] for r in self.rows]

    def records(self) -> list[dict[str, Any]]:
        return [dict(zip(self.columns, r)) for r in self.rows]

    def where(self, **match) -> "Table":
        idx = {k: self.columns.index(k) for k in match}
        keep = [r for r in self.rows if all(r[idx[k]] == v for k, v in match.items())]
        return Table(self.columns, keep)

    def __len__(self) -> int:
        return len(self.rows)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Table):
            return NotImplemented
        return self.columns == other.columns and self.rows == other.rows


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def _parse(s: str):
    if s == "true":
        return True
    if s == "false":
        return False
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def _json_value(v):
    if isinstance(v, float):
        if not math.isfinite(v):
            return _fmt(v)
        # repr of a float is the shortest round-trip form, within 17 significant digits
        return float(format(v, ".17g"))
    if hasattr(v, "item"):
        return _json_value(v.item())
    return v


def write_csv(table: Table, path: str | Path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(table.columns)
            for row in table.rows:
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def read_csv(path: str | Path) -> Table:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ExportError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if not rows:
        raise ExportError(f"{path}: empty file, expected a header row")
    return Table(tuple(rows[0]), [tuple(_parse(c) for c in r) for r in rows[1:]])


def write_json(table: Table, path: str | Path) -> Path:
    path = Path(path)
    doc = {"columns": list(table.columns), "rows": [{c: _json_value(v) for c, v in zip(table.columns, r)} for r in table.rows]}
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(doc, indent=1))
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def read_json(path: str | Path) -> Table:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ExportError(f"cannot read {path}: {exc.strerror or exc}") from exc
    cols = tuple(doc["columns"])
    rows = []
    for rec in doc["rows"]:
        rows.append(tuple(_parse(v) if isinstance(v, str) and v in ("nan", "inf", "-inf") else v for v in (rec[c] for c in cols)))
    return Table(cols, rows)


def export(table: Table, path: str | Path, format: str = "csv") -> Path:
    if format == "csv":
        return write_csv(table, path)
    if format == "json":
        return write_json(table, path)
    raise ValueError(f"unknown export format {format!r}")


def read_table(path: str | Path) -> Table:
    path = Path(path)
    return read_json(path) if path.suffix == ".json" else read_csv(path)


def as_table(columns: Sequence[str], records: Sequence[dict]) -> Table:
    return Table(tuple(columns), [tuple(r[c] for c in columns) for r in records])
