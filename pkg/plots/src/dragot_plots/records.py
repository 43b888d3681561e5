"""Reader for the evaluation-record CSV schema.

Schema: header ``t,eps,gamma,pot_err_sq,cost_gap,map_err,wall_ms``, one row
per evaluation, floats at full precision.
"""

from __future__ import annotations

import csv

HEADER = ["t", "eps", "gamma", "pot_err_sq", "cost_gap", "map_err", "wall_ms"]


def read_record_csv(path):
    """Rows as a list of dicts keyed by the schema columns."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if header != HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(HEADER):
                raise ValueError(f"{path}:{lineno}: expected {len(HEADER)} fields")
            try:
                rows.append({k: float(v) for k, v in zip(HEADER, row)})
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return rows
