"""Per-evaluation run records and their CSV round-trip.

One row per objective evaluation. Floats are written with 17 significant
digits so that a reread reproduces the exact binary values and reruns can
be compared byte for byte.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

SOURCE_INIT_HYP = "init_h"
SOURCE_INIT_GLOBAL = "init_g"
SOURCE_LOWER = "lower"
SOURCE_UPPER = "upper"
SOURCES = (SOURCE_INIT_HYP, SOURCE_INIT_GLOBAL, SOURCE_LOWER, SOURCE_UPPER)
_INIT_SOURCES = (SOURCE_INIT_HYP, SOURCE_INIT_GLOBAL)


@dataclass
class TraceRecord:
    iteration: int  # 0-based position within the trace
    source: str  # one of SOURCES
    hypothesis: int | None  # index for init_h/lower rows, else None
    x: np.ndarray
    y: float
    incumbent: float  # best value up to and including this row
    acq_value: float | None  # None for init and random rows
    level_counters: tuple[int, int]  # (l, u) plateau counters after this row

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"unknown source tag {self.source!r}")
        self.x = np.asarray(self.x, dtype=float)


class Trace:
    """Ordered evaluation log for one optimization run."""

    def __init__(self, dim: int):
        self.dim = int(dim)
        self.records: list[TraceRecord] = []

    def append(self, rec: TraceRecord) -> None:
        if rec.x.size != self.dim:
            raise ValueError("record dimension does not match trace")
        self.records.append(rec)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def n_init(self) -> int:
        return sum(1 for r in self.records if r.source in _INIT_SOURCES)

    def post_init(self) -> list[TraceRecord]:
        return [r for r in self.records if r.source not in _INIT_SOURCES]

    def incumbents(self, include_init: bool = False) -> np.ndarray:
        recs = self.records if include_init else self.post_init()
        return np.asarray([r.incumbent for r in recs])

    def values(self, include_init: bool = False) -> np.ndarray:
        recs = self.records if include_init else self.post_init()
        return np.asarray([r.y for r in recs])

    @property
    def best_y(self) -> float:
        if not self.records:
            raise ValueError("empty trace")
        return self.records[-1].incumbent


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def csv_header(dim: int) -> list[str]:
    cols = ["trial", "iteration", "source", "hypothesis"]
    cols += [f"x_{i}" for i in range(dim)]
    cols += ["y", "incumbent", "acq_value", "l", "u"]
    return cols


def write_traces_csv(path, traces: dict[int, Trace]) -> None:
    """Write traces keyed by trial index, ordered by trial then iteration."""
    if not traces:
        raise ValueError("no traces to write")
    dims = {t.dim for t in traces.values()}
    if len(dims) != 1:
        raise ValueError("traces disagree on dimension")
    dim = dims.pop()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(csv_header(dim))
        for trial in sorted(traces):
            for rec in traces[trial].records:
                row = [
                    trial,
                    rec.iteration,
                    rec.source,
                    "" if rec.hypothesis is None else rec.hypothesis,
                ]
                row += [_fmt(v) for v in rec.x]
                row += [
                    _fmt(rec.y),
                    _fmt(rec.incumbent),
                    "" if rec.acq_value is None else _fmt(rec.acq_value),
                    rec.level_counters[0],
                    rec.level_counters[1],
                ]
                w.writerow(row)


def read_traces_csv(path) -> dict[int, Trace]:
    """Inverse of :func:`write_traces_csv` (bit-exact floats)."""
    with open(path, "r", newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header is None:
            raise ValueError(f"{path}: empty trace file")
        xcols = [c for c in header if c.startswith("x_")]
        dim = len(xcols)
        if header != csv_header(dim):
            raise ValueError(f"{path}: unexpected trace header")
        out: dict[int, Trace] = {}
        for row in r:
            trial = int(row[0])
            rec = TraceRecord(
                iteration=int(row[1]),
                source=row[2],
                hypothesis=None if row[3] == "" else int(row[3]),
                x=np.asarray([float(v) for v in row[4 : 4 + dim]]),
                y=float(row[4 + dim]),
                incumbent=float(row[5 + dim]),
                acq_value=None if row[6 + dim] == "" else float(row[6 + dim]),
                level_counters=(int(row[7 + dim]), int(row[8 + dim])),
            )
            out.setdefault(trial, Trace(dim)).append(rec)
    return out
