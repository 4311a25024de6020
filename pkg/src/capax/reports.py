"""Deterministic machine-readable report emission.

Every number is printed with 17 significant digits so parsed values
round-trip exactly; +infinity prints as the literal "inf".  CSV output
carries a '#'-prefixed provenance block above the header row; JSON output
is a bare array of row objects.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

from .errors import InputError


def format_number(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            raise InputError("NaN has no report representation")
        return format(v, ".17g")
    return str(v)


def _json_scalar(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        out = v.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{out}"'
    if isinstance(v, float) and math.isinf(v):
        return '"inf"' if v > 0 else '"-inf"'
    return format_number(v)


@dataclass(frozen=True)
class Report:
    """One table: ordered column names, homogeneous rows, provenance."""

    command: str
    columns: tuple
    rows: tuple                  # tuple of tuples, aligned with columns
    provenance: tuple = ()       # ordered (key, value) pairs

    def __post_init__(self):
        for r in self.rows:
            if len(r) != len(self.columns):
                raise InputError("ragged report row")

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# capax {self.command}\n")
        for key, value in self.provenance:
            buf.write(f"# {key}={format_number(value)}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for r in self.rows:
            writer.writerow([format_number(v) for v in r])
        return buf.getvalue()

    def to_json(self) -> str:
        lines = []
        for r in self.rows:
            cells = ", ".join(f'{_json_scalar(c)}: {_json_scalar(v)}'
                              for c, v in zip(self.columns, r))
            lines.append("  {" + cells + "}")
        if not lines:
            return "[]\n"
        return "[\n" + ",\n".join(lines) + "\n]\n"

    def render(self, fmt: str) -> str:
        if fmt == "csv":
            return self.to_csv()
        if fmt == "json":
            return self.to_json()
        raise InputError(f"unknown report format {fmt!r}")
