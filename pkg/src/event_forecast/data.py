"""Censored single- and multiple-cohort lifetime data.

CSV layout (UTF-8, comma separated, ``#`` comment lines ignored)::

    cohort,kind,t1,t2,count
    A,interval,0,1,1
    A,right,3,,19992

``kind`` is one of ``exact``, ``right`` or ``interval``; ``t2`` is only
filled for intervals ``(t1, t2]``; ``count`` (optional column, default 1)
repeats the row.  Cohorts keep file order.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable

import numpy as np

from .exceptions import DataError

logger = logging.getLogger(__name__)

EXACT = "exact"
RIGHT = "right"
INTERVAL = "interval"
KINDS = (EXACT, RIGHT, INTERVAL)

CSV_HEADER = ("cohort", "kind", "t1", "t2", "count")


@dataclass(frozen=True)
class Observation:
    """``count`` identical units observed as ``kind``.

    Exact and right-censored observations use ``t1``; intervals are
    ``(t1, t2]``.
    """

    kind: str
    t1: float
    t2: float | None = None
    count: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"unknown observation kind {self.kind!r}")
        if int(self.count) != self.count or self.count < 1:
            raise DataError(f"count must be a positive integer, got {self.count}")
        if self.kind == INTERVAL:
            if self.t2 is None or not (0 <= self.t1 < self.t2):
                raise DataError(f"interval needs 0 <= t1 < t2, got ({self.t1}, {self.t2}]")
        else:
            if self.t2 is not None:
                raise DataError(f"{self.kind} observation takes a single time")
            if not self.t1 > 0:
                raise DataError(f"{self.kind} time must be positive, got {self.t1}")
        if not np.isfinite(self.t1) or (self.t2 is not None and not np.isfinite(self.t2)):
            raise DataError("times must be finite")

    @property
    def is_event(self) -> bool:
        return self.kind != RIGHT

    @property
    def last_time(self) -> float:
        return self.t2 if self.kind == INTERVAL else self.t1


@dataclass(frozen=True)
class Cohort:
    """Units entering service together.

    ``censor_time`` defaults to the latest time seen in the cohort, which is
    the age of its survivors at the data freeze.
    """

    id: str
    observations: tuple
    censor_time: float = field(default=None)

    def __post_init__(self):
        obs = tuple(self.observations)
        if not obs:
            raise DataError(f"cohort {self.id!r} has no observations")
        object.__setattr__(self, "observations", obs)
        latest = max(o.last_time for o in obs)
        if self.censor_time is None:
            object.__setattr__(self, "censor_time", float(latest))
        elif latest > self.censor_time:
            raise DataError(
                f"cohort {self.id!r}: observation at {latest} after censor time {self.censor_time}"
            )
        if not self.censor_time > 0:
            raise DataError(f"cohort {self.id!r}: censor time must be positive")
        early = [o.t1 for o in obs if o.kind == RIGHT and o.t1 < self.censor_time]
        if early:
            logger.warning(
                "cohort %r: %d right-censored rows end before the cohort censor time "
                "%g; they count in the risk set from %g",
                self.id, len(early), self.censor_time, self.censor_time,
            )

    @property
    def size(self) -> int:
        return sum(o.count for o in self.observations)

    @property
    def n_events(self) -> int:
        return sum(o.count for o in self.observations if o.is_event)

    @property
    def at_risk(self) -> int:
        return self.size - self.n_events

    @property
    def is_interval(self) -> bool:
        return any(o.kind == INTERVAL for o in self.observations)

    @cached_property
    def inspection_edges(self) -> np.ndarray:
        """Sorted distinct interval endpoints (empty without intervals)."""
        pts = set()
        for o in self.observations:
            if o.kind == INTERVAL:
                pts.update((o.t1, o.t2))
        return np.array(sorted(pts), dtype=float)


@dataclass(frozen=True)
class CensoredDataset:
    cohorts: tuple

    def __post_init__(self):
        cohorts = tuple(self.cohorts)
        if not cohorts:
            raise DataError("dataset has no cohorts")
        ids = [c.id for c in cohorts]
        if len(set(ids)) != len(ids):
            raise DataError("duplicate cohort ids")
        object.__setattr__(self, "cohorts", cohorts)

    @classmethod
    def single(cls, observations: Iterable[Observation], censor_time=None, id="1"):
        return cls((Cohort(id, tuple(observations), censor_time),))

    @classmethod
    def type1(cls, event_times, n: int, censor_time: float, id="1"):
        """Type I censored sample: exact ``event_times`` and ``n - r`` survivors."""
        event_times = np.asarray(event_times, dtype=float)
        obs = [Observation(EXACT, float(t)) for t in event_times]
        if n > len(event_times):
            obs.append(Observation(RIGHT, float(censor_time), count=n - len(event_times)))
        return cls((Cohort(id, tuple(obs), float(censor_time)),))

    @property
    def n(self) -> int:
        return sum(c.size for c in self.cohorts)

    @property
    def n_events(self) -> int:
        return sum(c.n_events for c in self.cohorts)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([c.size for c in self.cohorts], dtype=np.int64)

    @property
    def censor_times(self) -> np.ndarray:
        return np.array([c.censor_time for c in self.cohorts], dtype=float)

    @property
    def at_risk(self) -> np.ndarray:
        """Risk-set weights ``n_s - r_s`` per cohort."""
        return np.array([c.at_risk for c in self.cohorts], dtype=np.int64)

    def scaled(self, factor: float) -> "CensoredDataset":
        """Same data with every time multiplied by ``factor``."""
        def scale(o):
            t2 = None if o.t2 is None else o.t2 * factor
            return Observation(o.kind, o.t1 * factor, t2, o.count)
        return CensoredDataset(tuple(
            Cohort(c.id, tuple(scale(o) for o in c.observations), c.censor_time * factor)
            for c in self.cohorts
        ))

    def replicated(self, k: int) -> "CensoredDataset":
        """Every observation count multiplied by ``k``."""
        return CensoredDataset(tuple(
            Cohort(c.id, tuple(Observation(o.kind, o.t1, o.t2, o.count * k)
                               for o in c.observations), c.censor_time)
            for c in self.cohorts
        ))

    @cached_property
    def arrays(self) -> "ObservationArrays":
        return ObservationArrays.from_dataset(self)


@dataclass(frozen=True)
class ObservationArrays:
    """Flat weighted arrays grouped by observation kind (likelihood input)."""

    exact_t: np.ndarray
    exact_w: np.ndarray
    right_t: np.ndarray
    right_w: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    interval_w: np.ndarray

    @classmethod
    def from_dataset(cls, data: CensoredDataset) -> "ObservationArrays":
        ex, rc, iv = [], [], []
        for c in data.cohorts:
            for o in c.observations:
                if o.kind == EXACT:
                    ex.append((o.t1, o.count))
                elif o.kind == RIGHT:
                    rc.append((o.t1, o.count))
                else:
                    iv.append((o.t1, o.t2, o.count))
        ex = np.array(ex, dtype=float).reshape(-1, 2)
        rc = np.array(rc, dtype=float).reshape(-1, 2)
        iv = np.array(iv, dtype=float).reshape(-1, 3)
        return cls(ex[:, 0], ex[:, 1], rc[:, 0], rc[:, 1], iv[:, 0], iv[:, 1], iv[:, 2])

    @property
    def distinct_events(self) -> int:
        """Number of distinct exact times plus distinct event intervals."""
        return len(np.unique(self.exact_t)) + len({(a, b) for a, b in zip(self.lo, self.hi)})


def event_count(data: CensoredDataset) -> tuple[list[int], int]:
    per = [c.n_events for c in data.cohorts]
    return per, sum(per)


def _parse_float(text: str, what: str, line: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise DataError(f"{what} is not a number: {text!r}", line) from None


def read_csv(stream) -> CensoredDataset:
    rows = [(i, r) for i, r in enumerate(csv.reader(stream), start=1)
            if r and not r[0].lstrip().startswith("#") and any(x.strip() for x in r)]
    if not rows:
        raise DataError("empty data file")
    line, header = rows[0]
    header = tuple(h.strip().lower() for h in header)
    if header not in (CSV_HEADER, CSV_HEADER[:4]):
        raise DataError(f"expected header {','.join(CSV_HEADER)}, got {','.join(header)}", line)
    if len(rows) == 1:
        raise DataError("no observations after header", line)
    cohorts: dict[str, list[Observation]] = {}
    for line, row in rows[1:]:
        row = [x.strip() for x in row]
        if len(row) != len(header):
            raise DataError(f"expected {len(header)} fields, got {len(row)}", line)
        cid, kind, t1, t2 = row[:4]
        kind = kind.lower()
        if not cid:
            raise DataError("missing cohort id", line)
        if kind not in KINDS:
            raise DataError(f"kind must be one of {', '.join(KINDS)}, got {kind!r}", line)
        count = 1
        if len(row) == 5 and row[4]:
            try:
                count = int(row[4])
            except ValueError:
                raise DataError(f"count is not an integer: {row[4]!r}", line) from None
        a = _parse_float(t1, "t1", line)
        if kind == INTERVAL:
            if not t2:
                raise DataError("interval rows need t2", line)
            b = _parse_float(t2, "t2", line)
        else:
            if t2:
                raise DataError(f"{kind} rows take no t2", line)
            b = None
        try:
            obs = Observation(kind, a, b, count)
        except DataError as exc:
            raise DataError(str(exc), line) from None
        cohorts.setdefault(cid, []).append(obs)
    return CensoredDataset(tuple(Cohort(cid, tuple(obs)) for cid, obs in cohorts.items()))


def load_csv(path) -> CensoredDataset:
    with open(path, newline="", encoding="utf-8") as fh:
        return read_csv(fh)


def _fmt(x: float) -> str:
    return repr(float(x))


def to_csv(data: CensoredDataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for c in data.cohorts:
        for o in c.observations:
            w.writerow([c.id, o.kind, _fmt(o.t1), "" if o.t2 is None else _fmt(o.t2), o.count])
    return buf.getvalue()


def save_csv(data: CensoredDataset, path) -> None:
    Path(path).write_text(to_csv(data), encoding="utf-8")


# Builtin datasets ---------------------------------------------------------

def heat_exchanger() -> CensoredDataset:
    """20,000 tubes inspected yearly for three years; 1, 1 and 6 cracks found."""
    obs = (
        Observation(INTERVAL, 0.0, 1.0, 1),
        Observation(INTERVAL, 1.0, 2.0, 1),
        Observation(INTERVAL, 2.0, 3.0, 6),
        Observation(RIGHT, 3.0, None, 19992),
    )
    return CensoredDataset((Cohort("tubes", obs, 3.0),))


def _packaged(name: str) -> CensoredDataset:
    text = resources.files("event_forecast.datasets").joinpath(name).read_text(encoding="utf-8")
    return read_csv(io.StringIO(text))


def bearing_cage() -> CensoredDataset:
    return _packaged("bearing_cage.csv")


def product_a() -> CensoredDataset:
    return _packaged("product_a.csv")


BUILTINS = {
    "heat-exchanger": heat_exchanger,
    "bearing-cage": bearing_cage,
    "product-a": product_a,
}


def builtin(name: str) -> CensoredDataset:
    try:
        return BUILTINS[name]()
    except KeyError:
        raise DataError(
            f"unknown builtin dataset {name!r}; available: {', '.join(sorted(BUILTINS))}"
        ) from None
