"""Cycling-data ingestion and preprocessing.

Reads per-cycle discharge capacity summaries from CSV, normalizes each
cell against its early-life peak capacity, linearly extends the tail of
each trace down to a second-life capacity floor, and locates the
capacity threshold that gates the retirement optimization.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass

import numpy as np

from .errors import (
    AlreadyBelowFloor,
    DuplicateCycle,
    MalformedRow,
    NonDecreasingTail,
    NonMonotoneCycles,
    UnknownCell,
)

CSV_COLUMNS = ["cell_id", "split", "cycle", "discharge_capacity_ah", "nominal_capacity_ah"]

_SPLIT_NAMES = {"train": "train", "test1": "test1", "test2": "test2"}


class Split(enum.Enum):
    TRAIN = "train"
    PRIMARY_TEST = "test1"
    SECONDARY_TEST = "test2"


@dataclass(frozen=True)
class CellRecord:
    """One cell's per-cycle discharge-capacity history."""

    cell_id: str
    split: Split
    cycles: np.ndarray          # int, strictly increasing, starts at >= 1
    capacity_ah: np.ndarray     # float, strictly positive, same length
    nominal_capacity_ah: float
    extrapolated_from: int | None = None

    def __post_init__(self):
        cycles = np.asarray(self.cycles, dtype=int)
        caps = np.asarray(self.capacity_ah, dtype=float)
        if len(cycles) == 0 or len(cycles) != len(caps):
            raise ValueError(f"{self.cell_id}: cycles/capacity length mismatch or empty")
        if np.any(np.diff(cycles) <= 0):
            raise NonMonotoneCycles(f"{self.cell_id}: cycles not strictly increasing")
        if np.any(caps <= 0):
            raise ValueError(f"{self.cell_id}: non-positive capacity")
        object.__setattr__(self, "cycles", cycles)
        object.__setattr__(self, "capacity_ah", caps)


@dataclass(frozen=True)
class NormalizedTrace:
    """Dimensionless capacity trace q(k) = capacity / q0_ah."""

    cell_id: str
    cycles: np.ndarray
    q: np.ndarray
    q0_ah: float
    extrapolated_from: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "cycles", np.asarray(self.cycles, dtype=int))
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        if self.q0_ah <= 0:
            raise ValueError("q0_ah must be positive")
        if np.max(self.q) > 1.15:
            raise ValueError(f"{self.cell_id}: normalized capacity exceeds sanity bound 1.15")

    @property
    def measured_mask(self) -> np.ndarray:
        """Boolean mask of points that were measured (not synthetic)."""
        if self.extrapolated_from is None:
            return np.ones(len(self.cycles), dtype=bool)
        return self.cycles < self.extrapolated_from

    def to_json_dict(self) -> dict:
        return {
            "cell_id": self.cell_id,
            "q0_ah": self.q0_ah,
            "extrapolated_from": self.extrapolated_from,
            "cycles": self.cycles.tolist(),
            "q": self.q.tolist(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "NormalizedTrace":
        return cls(
            cell_id=d["cell_id"],
            cycles=np.asarray(d["cycles"], dtype=int),
            q=np.asarray(d["q"], dtype=float),
            q0_ah=float(d["q0_ah"]),
            extrapolated_from=d.get("extrapolated_from"),
        )


def load_split_manifest(path) -> dict:
    """Read a two-column cell_id,split CSV into a mapping."""
    manifest = {}
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["cell_id", "split"]:
            raise MalformedRow(f"{path}: expected header cell_id,split")
        for lineno, row in enumerate(reader, start=2):
            if len(row) < 2:
                raise MalformedRow(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            manifest[row[0].strip()] = row[1].strip()
    return manifest


def load_cells(path, split_manifest: dict | None = None) -> list[CellRecord]:
    """Load per-cycle capacity rows, grouped into one record per cell.

    The CSV must carry the columns ``cell_id,split,cycle,
    discharge_capacity_ah,nominal_capacity_ah``.  A separate manifest
    mapping cell_id -> split overrides / supplies the split column.
    """
    rows_by_cell: dict[str, list[tuple[int, float, float]]] = {}
    split_by_cell: dict[str, str] = {}
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None:
            raise MalformedRow(f"{path}: empty file")
        header = [h.strip() for h in header]
        if header != CSV_COLUMNS:
            raise MalformedRow(f"{path}: bad header {header!r}, expected {CSV_COLUMNS}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(CSV_COLUMNS):
                raise MalformedRow(f"{path}:{lineno}: expected {len(CSV_COLUMNS)} columns, got {len(row)}")
            cell_id = row[0].strip()
            try:
                cycle = int(row[2])
                cap = float(row[3])
                nominal = float(row[4])
            except ValueError as e:
                raise MalformedRow(f"{path}:{lineno}: non-numeric field ({e})") from None
            if split_manifest is not None:
                if cell_id not in split_manifest:
                    raise UnknownCell(f"{path}:{lineno}: cell {cell_id!r} missing from split manifest")
                split_name = split_manifest[cell_id]
            else:
                split_name = row[1].strip()
            if split_name not in _SPLIT_NAMES:
                raise MalformedRow(f"{path}:{lineno}: unknown split {split_name!r}")
            prev = split_by_cell.setdefault(cell_id, split_name)
            if prev != split_name:
                raise MalformedRow(f"{path}:{lineno}: cell {cell_id!r} has conflicting splits")
            rows_by_cell.setdefault(cell_id, []).append((cycle, cap, nominal))

    records = []
    for cell_id in sorted(rows_by_cell):
        rows = sorted(rows_by_cell[cell_id])
        cycles = [r[0] for r in rows]
        if len(set(cycles)) != len(cycles):
            dup = next(c for i, c in enumerate(cycles[1:], 1) if c == cycles[i - 1])
            raise DuplicateCycle(f"cell {cell_id!r}: cycle {dup} appears more than once")
        records.append(
            CellRecord(
                cell_id=cell_id,
                split=Split(split_by_cell[cell_id]),
                cycles=np.array(cycles, dtype=int),
                capacity_ah=np.array([r[1] for r in rows], dtype=float),
                nominal_capacity_ah=rows[0][2],
            )
        )
    return records


def normalize(cell: CellRecord, window: int = 100) -> NormalizedTrace:
    """Normalize capacity by the peak over the first `window` points.

    LFP cells show an initial capacity rise, so the early-life peak
    rather than the cycle-1 value is used as the denominator.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    q0 = float(np.max(cell.capacity_ah[: min(window, len(cell.capacity_ah))]))
    return NormalizedTrace(
        cell_id=cell.cell_id,
        cycles=cell.cycles.copy(),
        q=cell.capacity_ah / q0,
        q0_ah=q0,
        extrapolated_from=cell.extrapolated_from,
    )


def extend_linear(trace: NormalizedTrace, tail: int = 30, floor: float = 0.5) -> NormalizedTrace:
    """Extend a trace to `floor` on the OLS line through its last `tail` points.

    Appends one synthetic point per cycle on the fitted line, stopping at
    (and including, clamped to the floor) the first cycle whose line value
    drops to or below `floor`.
    """
    if len(trace.cycles) < tail:
        raise ValueError(f"{trace.cell_id}: need >= {tail} points to extend")
    if trace.q[-1] <= floor:
        raise AlreadyBelowFloor(f"{trace.cell_id}: last q {trace.q[-1]:.4f} <= floor {floor}")
    ks = trace.cycles[-tail:].astype(float)
    qs = trace.q[-tail:]
    slope, intercept = np.polyfit(ks, qs, 1)
    if slope >= 0:
        raise NonDecreasingTail(f"{trace.cell_id}: tail slope {slope:.3e} >= 0")

    new_cycles = []
    new_q = []
    k = int(trace.cycles[-1])
    while True:
        k += 1
        val = intercept + slope * k
        new_cycles.append(k)
        new_q.append(max(val, floor))
        if val <= floor + 1e-12:  # tolerance so an exact-floor landing terminates
            break
    return NormalizedTrace(
        cell_id=trace.cell_id,
        cycles=np.concatenate([trace.cycles, np.array(new_cycles, dtype=int)]),
        q=np.concatenate([trace.q, np.array(new_q)]),
        q0_ah=trace.q0_ah,
        extrapolated_from=int(trace.cycles[-1]) + 1,
    )


def trigger_cycle(trace: NormalizedTrace, threshold: float = 0.95, persist: int = 1) -> int | None:
    """First cycle where q <= threshold, or None if never crossed.

    `persist` > 1 requires that many consecutive sub-threshold points and
    returns the first cycle of the run.
    """
    below = trace.q <= threshold
    if persist <= 1:
        idx = np.flatnonzero(below)
        return int(trace.cycles[idx[0]]) if len(idx) else None
    run = 0
    for i, b in enumerate(below):
        run = run + 1 if b else 0
        if run >= persist:
            return int(trace.cycles[i - persist + 1])
    return None
