"""Domain types shared by every module: events, labels, samples, runs, trace sets."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import InvariantViolation


class EventKind(enum.Enum):
    """The four monitored counters. Definition order is the vector index everywhere."""

    BRANCH_INSTRUCTIONS = "branch-instructions"
    BRANCH_MISSES = "branch-misses"
    LLC_LOAD_MISSES = "llc-load-misses"
    L1D_LOAD_MISSES = "l1d-load-misses"

    @property
    def index(self) -> int:
        return EVENTS.index(self)

    @classmethod
    def from_alias(cls, name: str) -> "EventKind":
        """Map a perf event name (with optional ``:u``-style modifier) to an EventKind.

        Raises KeyError for names outside the alias table.
        """
        base = name.strip().split(":", 1)[0]
        return EVENT_ALIASES[base.lower()]


EVENTS: tuple[EventKind, ...] = tuple(EventKind)
EVENT_NAMES: tuple[str, ...] = tuple(e.value for e in EVENTS)
N_EVENTS = 4

BI = EventKind.BRANCH_INSTRUCTIONS.index
BM = EventKind.BRANCH_MISSES.index
LLC = EventKind.LLC_LOAD_MISSES.index
L1D = EventKind.L1D_LOAD_MISSES.index

# keys are lower-cased
EVENT_ALIASES: dict[str, EventKind] = {
    "branch-instructions": EventKind.BRANCH_INSTRUCTIONS,
    "branches": EventKind.BRANCH_INSTRUCTIONS,
    "branch-misses": EventKind.BRANCH_MISSES,
    "llc-load-misses": EventKind.LLC_LOAD_MISSES,
    "l1-dcache-load-misses": EventKind.L1D_LOAD_MISSES,
    "l1d-load-misses": EventKind.L1D_LOAD_MISSES,
}


class Label(enum.Enum):
    BENIGN = "benign"
    MALIGN = "malign"

    @property
    def sign(self) -> int:
        """+1 for Malign (the positive class), -1 for Benign."""
        return 1 if self is Label.MALIGN else -1

    @classmethod
    def from_sign(cls, s: int) -> "Label":
        return cls.MALIGN if s > 0 else cls.BENIGN

    @classmethod
    def parse(cls, value) -> Optional["Label"]:
        if value is None or isinstance(value, Label):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvariantViolation(f"unknown label {value!r}") from None

    def other(self) -> "Label":
        return Label.BENIGN if self is Label.MALIGN else Label.MALIGN


@dataclass(frozen=True)
class HpcSample:
    timestamp_ms: float
    counts: tuple[int, int, int, int]
    label: Optional[Label] = None
    app_id: str = ""

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if len(counts) != N_EVENTS:
            raise InvariantViolation(f"expected {N_EVENTS} counts, got {len(counts)}")
        if any(c < 0 for c in counts):
            raise InvariantViolation(f"negative count in {counts}")
        if counts[BM] > counts[BI]:
            raise InvariantViolation(
                f"branch-misses {counts[BM]} exceed branch-instructions {counts[BI]}")
        if not (self.timestamp_ms >= 0 and np.isfinite(self.timestamp_ms)):
            raise InvariantViolation(f"bad timestamp {self.timestamp_ms}")


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


class Run:
    """One application execution: a strictly time-ordered block of samples.

    Samples are held column-wise (``t_ms`` of shape (n,), ``counts`` of shape
    (n, 4)); ``samples`` materializes HpcSample objects on demand.
    """

    __slots__ = ("run_id", "app_id", "label", "t_ms", "counts")

    def __init__(self, run_id: str, app_id: str, label: Optional[Label],
                 t_ms: Sequence[float], counts) -> None:
        t = np.array(t_ms, dtype=np.float64).reshape(-1)
        c = np.array(counts, dtype=np.int64)
        if c.size == 0:
            c = c.reshape(0, N_EVENTS)
        if c.ndim != 2 or c.shape[1] != N_EVENTS:
            raise InvariantViolation(f"run {run_id}: counts must be (n, {N_EVENTS}), got {c.shape}")
        if c.shape[0] != t.shape[0]:
            raise InvariantViolation(f"run {run_id}: {t.shape[0]} timestamps for {c.shape[0]} samples")
        if (c < 0).any():
            raise InvariantViolation(f"run {run_id}: negative counts")
        if (c[:, BM] > c[:, BI]).any():
            raise InvariantViolation(f"run {run_id}: branch-misses exceed branch-instructions")
        if t.size and (not np.isfinite(t).all() or (t < 0).any()):
            raise InvariantViolation(f"run {run_id}: bad timestamps")
        if t.size > 1 and not (np.diff(t) > 0).all():
            raise InvariantViolation(f"run {run_id}: timestamps must strictly increase")
        object.__setattr__(self, "run_id", str(run_id))
        object.__setattr__(self, "app_id", str(app_id))
        object.__setattr__(self, "label", Label.parse(label))
        object.__setattr__(self, "t_ms", _frozen(t))
        object.__setattr__(self, "counts", _frozen(c))

    def __setattr__(self, name, value):
        raise AttributeError("Run is immutable")

    def __len__(self) -> int:
        return self.t_ms.shape[0]

    @property
    def samples(self) -> list[HpcSample]:
        return [HpcSample(float(t), tuple(int(v) for v in row), self.label, self.app_id)
                for t, row in zip(self.t_ms, self.counts)]

    @property
    def duration_ms(self) -> float:
        """Elapsed time covered by the run; timestamps mark interval ends since run start."""
        if len(self) == 0:
            return 0.0
        return max(float(self.t_ms[-1]), 1.0)

    def relabel(self, label: Optional[Label]) -> "Run":
        return Run(self.run_id, self.app_id, label, self.t_ms, self.counts)

    def __eq__(self, other):
        if not isinstance(other, Run):
            return NotImplemented
        return (self.run_id == other.run_id and self.app_id == other.app_id
                and self.label == other.label
                and np.array_equal(self.t_ms, other.t_ms)
                and np.array_equal(self.counts, other.counts))

    def __repr__(self):
        lab = self.label.value if self.label else None
        return f"Run({self.run_id!r}, app={self.app_id!r}, label={lab}, n={len(self)})"


@dataclass(frozen=True)
class Source:
    kind: str = "ingested"  # "ingested" | "synthetic"
    seed: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("ingested", "synthetic"):
            raise InvariantViolation(f"unknown source kind {self.kind!r}")
        if self.kind == "synthetic" and self.seed is None:
            raise InvariantViolation("synthetic source needs a seed")


@dataclass(frozen=True)
class TraceSet:
    runs: tuple[Run, ...] = ()
    source: Source = Source()

    def __post_init__(self):
        object.__setattr__(self, "runs", tuple(self.runs))
        seen = set()
        for r in self.runs:
            if r.run_id in seen:
                raise InvariantViolation(f"duplicate run_id {r.run_id!r}")
            seen.add(r.run_id)

    @property
    def n_samples(self) -> int:
        return sum(len(r) for r in self.runs)

    def samples(self) -> Iterator[HpcSample]:
        for r in self.runs:
            yield from r.samples

    def labels_by_run(self) -> dict[str, Optional[Label]]:
        return {r.run_id: r.label for r in self.runs}

    def strip_labels(self) -> "TraceSet":
        return TraceSet(tuple(r.relabel(None) for r in self.runs), self.source)

    def attach_labels(self, labels: dict[str, Optional[Label]]) -> "TraceSet":
        return TraceSet(tuple(r.relabel(labels[r.run_id]) for r in self.runs), self.source)

    def merge(self, other: "TraceSet") -> "TraceSet":
        return TraceSet(self.runs + other.runs, self.source)
