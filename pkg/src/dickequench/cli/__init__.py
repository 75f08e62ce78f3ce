"""Command-line front end; see ``python -m dickequench.cli --help``."""

from .config import PRESETS, RunConfig, from_mapping, load_file, preset
from .dataset import Dataset, Matrix, Table
from .runs import run_compare, run_husimi, run_scan, run_thresholds

__all__ = [
    "Dataset",
    "from_mapping",
    "load_file",
    "Matrix",
    "preset",
    "PRESETS",
    "run_compare",
    "run_husimi",
    "run_scan",
    "run_thresholds",
    "RunConfig",
    "Table",
]
