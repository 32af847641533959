"""Report models, mergeable per-bound tallies and CSV/JSON emission."""

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from src import __version__
from src.config import settings

logger = logging.getLogger(__name__)

OBSERVATION_COLUMNS = (
    "t",
    "sin_angle",
    "bound_id",
    "bound_value",
    "tightness",
    "satisfied",
)


def format_float(value: Optional[float]) -> str:
    """17 significant digits, '.' decimal separator; empty for missing cells."""
    if value is None:
        return ""
    return format(float(value), ".17g")


@dataclass
class BoundOutcome:
    """Result of checking one bound on one observation."""

    bound_value: float
    measured: float
    satisfied: bool
    tightness: float


@dataclass
class PairObservation:
    """One sampled (p, q) pair and every bound checked on it."""

    t: float
    sin_angle: float
    dist_q_to_Tp: float
    lfs_p: float
    lfs_q: float
    per_bound: Dict[str, BoundOutcome] = field(default_factory=dict)

    def rows(self) -> List[Tuple[Any, ...]]:
        return [
            (
                self.t,
                self.sin_angle,
                bound_id,
                outcome.bound_value,
                outcome.tightness,
                outcome.satisfied,
            )
            for bound_id, outcome in self.per_bound.items()
        ]


def check_bound(
    bound_value: float,
    measured: float,
    rtol: float,
    atol: float,
    lower: bool = False,
) -> BoundOutcome:
    """Compare a measurement with a bound in normalized units.

    Upper bounds hold when measured <= bound (1 + rtol) + atol and their tightness
    is measured / bound, so a satisfied outcome has tightness <= 1 + rtol + atol / bound.
    Lower bounds swap the roles.
    """
    if lower:
        numerator, denominator = bound_value, measured
    else:
        numerator, denominator = measured, bound_value
    satisfied = numerator <= denominator * (1.0 + rtol) + atol
    if denominator > 0.0:
        tightness = numerator / denominator
    else:
        tightness = 0.0 if numerator <= atol else math.inf
    return BoundOutcome(float(bound_value), float(measured), bool(satisfied), float(tightness))


class BoundTally:
    """Per-bound aggregate; merging is associative and order-insensitive."""

    def __init__(
        self,
        kind: str,
        t_domain: str = "",
        normalization: str = "",
        reconstructed: bool = False,
        buckets: Optional[int] = None,
    ) -> None:
        self.kind = kind
        self.t_domain = t_domain
        self.normalization = normalization
        self.reconstructed = reconstructed
        self.buckets = buckets or settings.histogram_buckets
        self.violations = 0
        self.in_domain = 0
        self.max_tightness: Optional[float] = None
        self.histogram = np.zeros(self.buckets, dtype=np.int64)

    def add(self, outcome: BoundOutcome) -> None:
        self.in_domain += 1
        if not outcome.satisfied:
            self.violations += 1
        if self.max_tightness is None or outcome.tightness > self.max_tightness:
            self.max_tightness = outcome.tightness
        bucket = int(np.clip(math.floor(min(outcome.tightness, 1.0) * self.buckets), 0, self.buckets - 1))
        self.histogram[bucket] += 1

    def merge(self, other: "BoundTally") -> "BoundTally":
        self.violations += other.violations
        self.in_domain += other.in_domain
        if other.max_tightness is not None and (
            self.max_tightness is None or other.max_tightness > self.max_tightness
        ):
            self.max_tightness = other.max_tightness
        self.histogram += other.histogram
        return self

    def summary(self) -> "BoundSummary":
        return BoundSummary(
            kind=self.kind,
            t_domain=self.t_domain,
            normalization=self.normalization,
            reconstructed=self.reconstructed,
            violations=self.violations,
            in_domain=self.in_domain,
            max_tightness=self.max_tightness,
            histogram=[int(count) for count in self.histogram],
        )


class BoundSummary(BaseModel):
    """Aggregated result for one bound."""

    kind: str
    t_domain: str = ""
    normalization: str = ""
    reconstructed: bool = False
    violations: int = 0
    in_domain: int = 0
    max_tightness: Optional[float] = None
    histogram: List[int] = Field(default_factory=list)


class VerificationReport(BaseModel):
    """Aggregate over all observations of one harness run."""

    tool_version: str = __version__
    command: str
    manifold: Dict[str, Any]
    seed: int
    n_pairs: int
    n_completed: int = 0
    sampling_failures: int = 0
    t_range: Optional[Tuple[float, float]] = None
    tolerance: float
    per_bound: Dict[str, BoundSummary] = Field(default_factory=dict)
    flags: Dict[str, bool] = Field(default_factory=dict)
    statistics: Dict[str, Optional[float]] = Field(default_factory=dict)
    notes: List[str] = Field(default_factory=list)
    config: Dict[str, Any] = Field(default_factory=dict)
    wall_time_s: Optional[float] = None

    @property
    def total_violations(self) -> int:
        return sum(summary.violations for summary in self.per_bound.values())

    @property
    def passed(self) -> bool:
        return self.total_violations == 0 and all(self.flags.values())

    def to_json(self, omit_timing: bool = False) -> str:
        exclude = {"wall_time_s"} if omit_timing else None
        return self.model_dump_json(indent=2, exclude=exclude)


def write_report(report: BaseModel, path: Optional[Union[str, Path]], omit_timing: bool = False) -> str:
    """Serialize a report; write it to ``path`` when given and return the text."""
    if isinstance(report, VerificationReport):
        text = report.to_json(omit_timing=omit_timing)
    else:
        exclude = {"wall_time_s"} if omit_timing else None
        text = report.model_dump_json(indent=2, exclude=exclude)
    if path is not None:
        Path(path).write_text(text + "\n", encoding="utf-8")
        logger.info("Wrote report to %s", path)
    return text


def write_csv(
    target: Union[str, Path, TextIO], columns: Sequence[str], rows: Iterable[Sequence[Any]]
) -> int:
    """RFC-4180 CSV with round-trip-exact floats to a path or an open stream. Returns the row count."""
    if not isinstance(target, (str, Path)):
        return _write_rows(target, columns, rows)
    with open(target, "w", newline="", encoding="utf-8") as f:
        count = _write_rows(f, columns, rows)
    logger.info("Wrote %d rows to %s", count, target)
    return count


def _write_rows(stream: TextIO, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> int:
    writer = csv.writer(stream, lineterminator="\r\n")
    writer.writerow(columns)
    count = 0
    for row in rows:
        writer.writerow([_cell(value) for value in row])
        count += 1
    return count


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format_float(float(value))
    return str(value)


def write_observations_csv(path: Union[str, Path], observations: Iterable[PairObservation]) -> int:
    rows = (row for observation in observations for row in observation.rows())
    return write_csv(path, OBSERVATION_COLUMNS, rows)
