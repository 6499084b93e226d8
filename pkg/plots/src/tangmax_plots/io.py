"""Readers for the experiment CSV/JSON outputs.

These parse the documented schemas only; any column drift raises rather
than being silently tolerated, because the figures must never re-derive or
guess at science values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

SWEEP_COLUMNS = ["n", "alpha", "R", "regime", "N", "tol", "seed", "wall_ms"]


class SchemaError(ValueError):
    """Input file does not match the documented schema."""


@dataclass(frozen=True)
class SweepTable:
    rows: tuple  # of dicts with typed fields
    meta: str

    @property
    def scales(self):
        return [row["R"] for row in self.rows]

    @property
    def ratios(self):
        return [row["N"] for row in self.rows]


def read_sweep_csv(path) -> SweepTable:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"sweep CSV not found: {path}")
    lines = path.read_text().splitlines()
    if not lines or not lines[0].startswith("#"):
        raise SchemaError(f"{path}: missing metadata header line")
    if len(lines) < 2 or lines[1].split(",") != SWEEP_COLUMNS:
        raise SchemaError(f"{path}: expected columns {','.join(SWEEP_COLUMNS)}")
    rows = []
    for lineno, line in enumerate(lines[2:], 3):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != len(SWEEP_COLUMNS):
            raise SchemaError(f"{path}:{lineno}: wrong column count")
        try:
            rows.append(
                {
                    "n": int(parts[0]),
                    "alpha": parts[1],
                    "R": float(parts[2]),
                    "regime": parts[3],
                    "N": float(parts[4]),
                    "tol": float(parts[5]),
                    "seed": int(parts[6]),
                    "wall_ms": float(parts[7]),
                }
            )
        except ValueError as exc:
            raise SchemaError(f"{path}:{lineno}: {exc}") from exc
    return SweepTable(rows=tuple(rows), meta=lines[0])


def read_fit_json(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"fit JSON not found: {path}")
    payload = json.loads(path.read_text())
    missing = {"slope", "intercept", "residual", "s0_ref"} - set(payload)
    if missing:
        raise SchemaError(f"{path}: fit JSON missing keys {sorted(missing)}")
    return payload


def read_audit_json(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"audit JSON not found: {path}")
    payload = json.loads(path.read_text())
    missing = {"R", "overlap_audit", "density_audit"} - set(payload)
    if missing:
        raise SchemaError(f"{path}: audit JSON missing keys {sorted(missing)}")
    return payload
