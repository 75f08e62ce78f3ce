"""Tabular results and their CSV + JSON sidecar serialization."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig


def fmt(value) -> str:
    """Deterministic cell text: shortest round-trip repr for floats, 'nan' for missing."""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    x = float(value)
    if math.isnan(x):
        return "nan"
    return repr(x)


@dataclass
class Table:
    columns: tuple
    units: tuple
    rows: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.columns) != len(self.units):
            raise ValueError("every column needs a unit")

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def write(self, path: Path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.columns)
            for r in self.rows:
                w.writerow([fmt(v) for v in r])


@dataclass
class Matrix:
    """Values on a 2-D grid; written with the x axis as header row and p in the first column."""

    x_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray
    corner: str = "p\\x"

    def write(self, path: Path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([self.corner] + [fmt(x) for x in self.x_axis])
            for p, row in zip(self.p_axis, self.values):
                w.writerow([fmt(p)] + [fmt(v) for v in row])


@dataclass
class Dataset:
    """Named tables plus the metadata needed to rerun them.

    The table stored under "" is the primary ``<name>.csv``; any other key
    ``k`` is written to ``<name>_<k>.csv``.
    """

    name: str
    command: str
    config: RunConfig
    tables: dict
    breached: bool = False
    info: dict = field(default_factory=dict)

    def files(self) -> dict:
        return {(f"{self.name}.csv" if k == "" else f"{self.name}_{k}.csv"): t for k, t in self.tables.items()}

    def metadata(self, wall_clock: float | None = None) -> dict:
        from .. import __version__

        described = {}
        for fname, t in self.files().items():
            if isinstance(t, Table):
                described[fname] = {"columns": list(t.columns), "units": list(t.units)}
            else:
                described[fname] = {"layout": "matrix", "header": "x = sqrt(2) Re(alpha)", "first_column": "p = sqrt(2) Im(alpha)"}
        return {
            "name": self.name,
            "command": self.command,
            "config": self.config.to_dict(),
            "software": {"package": "dickequench", "version": __version__},
            "wall_clock_seconds": wall_clock,
            "breached": self.breached,
            "tables": described,
            **self.info,
        }

    def write(self, out_dir: str | Path, wall_clock: float | None = None) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for fname, t in self.files().items():
            t.write(out / fname)
            written.append(out / fname)
        meta = out / f"{self.name}.meta.json"
        meta.write_text(json.dumps(self.metadata(wall_clock), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        written.append(meta)
        return written
