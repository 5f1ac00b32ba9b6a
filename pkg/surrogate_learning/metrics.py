"""Precision/recall metrics, threshold sweeps and the evaluation report."""

from __future__ import annotations

import json
import logging
from collections.abc import Mapping, Sequence
from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING, Any, Optional

import numpy as np

from .errors import DomainError

if TYPE_CHECKING:
    import pathlib

    from .linkage import MatchDecision

_LOGGER = logging.getLogger(__name__)

# Reported figures are rounded so reports stay readable and stable.
_REPORT_DIGITS = 12


@dataclass(frozen=True)
class PrecisionRecall:
    """Precision is None when no match was emitted."""

    precision: Optional[float]
    recall: float

    @property
    def f1(self) -> float:
        if not self.precision or not self.recall:
            return 0.0
        return 2.0 * self.precision * self.recall / (self.precision + self.recall)


@dataclass(frozen=True)
class SweepPoint:
    """Precision and recall when every score at or above threshold is positive."""

    threshold: float
    precision: float
    recall: float


@dataclass
class EvalReport:
    """Results of one experiment, serialisable for regression checks."""

    experiment: str
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]
    threshold: Optional[float]
    seed: int
    sweep: list[SweepPoint] = field(default_factory=list)
    config_echo: dict[str, Any] = field(default_factory=dict)
    # Experiment-specific figures (accuracies, error maxima, baselines).
    metrics: dict[str, Any] = field(default_factory=dict)
    passed: bool = True
    failures: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        for name in ("precision", "recall"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise DomainError(f"{name}={value} outside [0, 1]")
        thresholds = [point.threshold for point in self.sweep]
        if any(b <= a for a, b in zip(thresholds, thresholds[1:], strict=False)):
            raise DomainError("Sweep thresholds must be strictly increasing")

    def check(self, name: str, *, ok: bool) -> None:
        """Record the outcome of a checked property."""
        if not ok:
            _LOGGER.error("%s: check failed: %s", self.experiment, name)
            self.failures.append(name)
            self.passed = False

    def to_json(self) -> str:
        return json.dumps(_rounded(asdict(self)), indent=2, sort_keys=True) + "\n"

    def to_table(self) -> str:
        """A plain-text summary of the headline figures and the sweep."""
        lines = [
            f"experiment  {self.experiment}",
            f"seed        {self.seed}",
            f"precision   {_fmt(self.precision)}",
            f"recall      {_fmt(self.recall)}",
            f"f1          {_fmt(self.f1)}",
            f"threshold   {_fmt(self.threshold)}",
            f"passed      {self.passed}",
        ]
        lines.extend(
            f"{key:<11} {_fmt(value)}" for key, value in sorted(self.metrics.items())
        )
        if self.sweep:
            lines.append("")
            lines.append(f"{'threshold':>10} {'precision':>10} {'recall':>10}")
            lines.extend(
                f"{p.threshold:>10.4f} {p.precision:>10.4f} {p.recall:>10.4f}"
                for p in self.sweep
            )
        return "\n".join(lines) + "\n"

    def write(self, out_dir: pathlib.Path, stem: Optional[str] = None) -> None:
        """Write <stem>.json and <stem>.txt into out_dir."""
        stem = stem or self.experiment
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"{stem}.json").write_text(self.to_json())
        (out_dir / f"{stem}.txt").write_text(self.to_table())


def compute_pr(
    decisions: Sequence[MatchDecision], truth: Mapping[str, Optional[str]]
) -> PrecisionRecall:
    """Precision and recall of emitted matches against the ground truth.

    Recall counts only matchable updates. A match emitted for an unmatchable
    update counts against precision; abstaining on it counts nowhere. Updates
    without a decision are left out, so passing a subset of the decisions
    evaluates that subset.
    """
    emitted = [d for d in decisions if d.master_id is not None]
    correct = sum(1 for d in emitted if truth.get(d.update_id) == d.master_id)
    decided_ids = {d.update_id for d in decisions}
    matchable = sum(
        1 for update_id, master_id in truth.items()
        if master_id is not None and update_id in decided_ids
    )
    precision = correct / len(emitted) if emitted else None
    recall = correct / matchable if matchable else 0.0
    return PrecisionRecall(precision=precision, recall=recall)


def threshold_sweep(
    scored: Sequence[tuple[float, int]], grid: int
) -> list[SweepPoint]:
    """Precision and recall of score >= t at `grid` evenly spaced t in [0, 1].

    Precision is reported as 1.0 where nothing is predicted positive.
    """
    if grid < 2:  # noqa: PLR2004
        raise DomainError(f"Sweep grid must have at least 2 points, got {grid}")
    scores = np.asarray([s for s, _ in scored], dtype=np.float64)
    labels = np.asarray([label for _, label in scored], dtype=np.int_) == 1
    positives = int(labels.sum())

    points: list[SweepPoint] = []
    for threshold in np.linspace(0.0, 1.0, grid).tolist():
        predicted = scores >= threshold
        tp = int(np.count_nonzero(predicted & labels))
        n_predicted = int(np.count_nonzero(predicted))
        points.append(
            SweepPoint(
                threshold=threshold,
                precision=tp / n_predicted if n_predicted else 1.0,
                recall=tp / positives if positives else 0.0,
            )
        )
    return points


def _fmt(value: Any) -> str:  # noqa: ANN401
    if isinstance(value, float):
        return f"{value:.4f}"
    if value is None:
        return "-"
    return str(value)


def _rounded(value: Any) -> Any:  # noqa: ANN401
    if isinstance(value, float):
        return round(value, _REPORT_DIGITS)
    if isinstance(value, dict):
        return {key: _rounded(item) for key, item in value.items()}
    if isinstance(value, list | tuple):
        return [_rounded(item) for item in value]
    return value
