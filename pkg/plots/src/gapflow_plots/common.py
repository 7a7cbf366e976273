"""Shared CSV loading and job plumbing for the figure scripts.

The scripts are strictly downstream of the solver CLI's CSV artifacts:
they parse the documented column layouts, never recompute solver
quantities, and overwrite their output image idempotently.
"""

import argparse
import csv
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

PLOT_KINDS = ("rates", "diagnostics", "blowup", "mosco")


class ColumnError(Exception):
    """A required CSV column is missing or renamed."""


@dataclass
class PlotJob:
    inputs: list
    kind: str
    output: str

    def __post_init__(self):
        if self.kind not in PLOT_KINDS:
            raise ValueError(f"unknown plot kind {self.kind!r}")
        for p in self.inputs:
            if not Path(p).exists():
                raise FileNotFoundError(p)


@dataclass
class PlotResult:
    """What a render produced, for callers and tests."""

    path: str
    n_points: int = 0
    n_lines: int = 0
    annotation: str = ""
    printed: dict = field(default_factory=dict)


def read_columns(path, required):
    """Read a CSV with a header row; return {name: list[str]}.

    Raises ColumnError naming the first missing required column.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ColumnError(f"{path}: empty file, expected columns {required}")
        for name in required:
            if name not in header:
                raise ColumnError(f"{path}: missing column {name!r}")
        idx = {name: header.index(name) for name in header}
        data = {name: [] for name in header}
        for row in reader:
            for name, i in idx.items():
                data[name].append(row[i])
    return data


def floats(values):
    return [float(v) for v in values]


def script_main(render, description):
    """Shared argv handling: INPUT... OUTPUT, exit 2 on bad columns."""

    def main(argv=None):
        parser = argparse.ArgumentParser(description=description)
        parser.add_argument("inputs", nargs="+", help="input CSV path(s)")
        parser.add_argument("output", help="output image path")
        args = parser.parse_args(argv)
        try:
            job = PlotJob(inputs=args.inputs[:], kind=render.kind, output=args.output)
            result = render(job)
        except (ColumnError, FileNotFoundError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        for key, value in result.printed.items():
            print(f"{key}: {value}")
        return 0

    return main
