"""Plain-text and CSV table emission."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

__all__ = ["Table", "render"]


@dataclass
class Table:
    title: str
    columns: list[str]
    rows: list[list[Any]] = field(default_factory=list)

    def add(self, *values: Any) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} cells, table has {len(self.columns)} columns")
        self.rows.append(list(values))


def _cell(value: Any, precise: bool) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "yes" if value else "no"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if precise:
            return repr(value)
        return f"{value:.4f}"
    if value is None:
        return ""
    return str(value)


def _text(table: Table) -> str:
    cells = [[_cell(v, False) for v in row] for row in table.rows]
    widths = [len(c) for c in table.columns]
    for row in cells:
        widths = [max(w, len(c)) for w, c in zip(widths, row)]
    lines = [table.title, "=" * max(len(table.title), 1)]
    lines.append("  ".join(c.rjust(w) for c, w in zip(table.columns, widths)))
    lines.append("  ".join("-" * w for w in widths))
    for row in cells:
        lines.append("  ".join(c.rjust(w) for c, w in zip(row, widths)))
    return "\n".join(lines) + "\n"


def _csv(table: Table, titles: bool) -> str:
    buf = io.StringIO()
    if titles:
        buf.write(f"# {table.title}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_cell(v, True) for v in row])
    return buf.getvalue()


def render(tables: Sequence[Table], fmt: str = "text", titles: bool = True) -> str:
    """Text tables use 4 decimals; CSV keeps full (round-trip) precision and
    prefixes each table with a ``# title`` line unless ``titles`` is false."""
    if fmt == "text":
        return "\n".join(_text(t) for t in tables)
    if fmt == "csv":
        return "\n".join(_csv(t, titles) for t in tables)
    raise ValueError(f"unknown format {fmt!r}")
