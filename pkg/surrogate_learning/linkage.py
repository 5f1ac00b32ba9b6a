"""Record linkage with a surrogate label.

Update records are blocked against the master database by last name and every
candidate pair is turned into similarity features. The equality of one field
(graduation year by default) is the surrogate x1: a true match always agrees
on it, and two different physicians agree on it by chance only. A predictor
of x1 from the remaining similarities is learnt from all candidate pairs
without any labels, and the match score follows from the hundred percent
recall identity. The best candidate in each block is accepted when its score
reaches the decision threshold.

A supervised logistic regression matcher trained on a fraction of the ground
truth is provided as a baseline.
"""

from __future__ import annotations

import csv
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

import numpy as np
import numpy.typing as npt

from .const import (
    DEFAULT_CLAMP_EPSILON,
    DEFAULT_DECISION_THRESHOLD,
    DEFAULT_HOLDOUT_FRACTION,
    DEFAULT_SEED,
    Mode,
    Objective,
    SurrogateField,
)
from .core_math import (
    ClassConditionalX1,
    SurrogateModel,
    score_missing_x1,
    score_special,
    select_threshold,
    surrogate_posterior_y1,
)
from .errors import DomainError, InsufficientData, InsufficientLabels
from .predictor import FeatureVector, LogisticModel, TrainConfig, fit_logistic_matrix
from .similarity import edit_similarity, exact_similarity

if TYPE_CHECKING:
    import pathlib

    from .records import LinkageCorpus, LinkageRecord

_LOGGER = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

# The x2 similarity features, in order, for each choice of surrogate field.
FEATURE_NAMES: dict[SurrogateField, tuple[str, ...]] = {
    SurrogateField.GRAD_YEAR: (
        "first_similarity",
        "middle_initial_equal",
        "street_similarity",
        "phone_equal",
        "specialty_equal",
    ),
    SurrogateField.MIDDLE_INITIAL: (
        "first_similarity",
        "street_similarity",
        "phone_equal",
        "specialty_equal",
        "grad_year_equal",
    ),
}

DECISION_COLUMNS = ("update_id", "master_id", "score")


@dataclass(frozen=True, eq=False)
class PairFeatures:
    """The surrogate x1 (None when missing) and the similarity vector x2."""

    x1: Optional[int]
    x2: FeatureVector

    def __post_init__(self) -> None:
        if self.x1 not in (None, 0, 1):
            raise DomainError(f"x1={self.x1} must be 0, 1 or missing")
        present = self.x2.values[~self.x2.missing_mask]
        if np.any((present < 0.0) | (present > 1.0)):
            raise DomainError("Similarities must lie in [0, 1]")


@dataclass(frozen=True, eq=False)
class Candidate:
    """A blocked (update, master) pair and its features."""

    update_id: str
    master_id: str
    features: PairFeatures


@dataclass(frozen=True)
class MatchDecision:
    """The match chosen for one update record, or None to abstain."""

    update_id: str
    master_id: Optional[str]
    score: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise DomainError(f"Score {self.score} outside [0, 1]")


@dataclass(frozen=True)
class MatcherConfig:
    """Settings shared by the surrogate matcher and the supervised baseline."""

    train: TrainConfig = field(default_factory=TrainConfig)
    surrogate_field: SurrogateField = SurrogateField.GRAD_YEAR
    objective: Objective = Objective.F1
    # Fraction of update records whose truth is used to pick the threshold.
    holdout_fraction: float = DEFAULT_HOLDOUT_FRACTION
    # A fixed threshold skips the holdout selection entirely.
    threshold: Optional[float] = None
    # Used when the holdout lacks one of the labels.
    fallback_threshold: float = DEFAULT_DECISION_THRESHOLD
    clamp_epsilon: float = DEFAULT_CLAMP_EPSILON
    seed: int = DEFAULT_SEED

    def __post_init__(self) -> None:
        if not 0.0 <= self.holdout_fraction <= 1.0:
            raise DomainError(f"holdout_fraction={self.holdout_fraction}")
        for threshold in (self.threshold, self.fallback_threshold):
            if threshold is not None and not 0.0 <= threshold <= 1.0:
                raise DomainError(f"Threshold {threshold} outside [0, 1]")


@dataclass(frozen=True, eq=False)
class MatchResult:
    """Decisions for every update record and how they were reached."""

    decisions: list[MatchDecision]
    threshold: float
    # Update ids whose truth was not consumed for training or threshold choice.
    evaluation_ids: frozenset[str]
    # Best (score, correct) per labelled update in the evaluation set.
    scored: list[tuple[float, int]]
    model: LogisticModel
    conditionals: Optional[ClassConditionalX1] = None


class MasterIndex:
    """Master records grouped by last name, each block sorted by id."""

    def __init__(self, master: Sequence[LinkageRecord]) -> None:
        self._blocks: dict[str, list[LinkageRecord]] = {}
        for record in master:
            self._blocks.setdefault(record.last, []).append(record)
        for block_records in self._blocks.values():
            block_records.sort(key=lambda r: r.id)

    def block(self, last: str) -> list[LinkageRecord]:
        return list(self._blocks.get(last, []))

    def __len__(self) -> int:
        return len(self._blocks)


def block(
    update: LinkageRecord, master: MasterIndex | Sequence[LinkageRecord]
) -> list[LinkageRecord]:
    """All master records whose last name equals the update's."""
    index = master if isinstance(master, MasterIndex) else MasterIndex(master)
    return index.block(update.last)


def extract_features(
    update: LinkageRecord,
    candidate: LinkageRecord,
    surrogate: SurrogateField = SurrogateField.GRAD_YEAR,
) -> PairFeatures:
    """Compare two records field by field.

    Strings are compared with the normalised edit similarity, categorical
    fields by equality. Any comparison involving a missing field is missing.
    """
    year_equal = exact_similarity(
        _optional_str(update.grad_year), _optional_str(candidate.grad_year)
    )
    middle_equal = exact_similarity(update.middle_initial, candidate.middle_initial)
    first = edit_similarity(update.first, candidate.first)
    street = edit_similarity(update.street, candidate.street)
    phone = exact_similarity(update.phone, candidate.phone)
    specialty = exact_similarity(update.specialty, candidate.specialty)

    match surrogate:
        case SurrogateField.GRAD_YEAR:
            x1 = year_equal
            x2 = [first, middle_equal, street, phone, specialty]
        case SurrogateField.MIDDLE_INITIAL:
            x1 = middle_equal
            x2 = [first, street, phone, specialty, year_equal]

    return PairFeatures(
        x1=None if x1 is None else int(x1), x2=FeatureVector.from_optional(x2)
    )


def score_pair(f: PairFeatures, model: SurrogateModel[FeatureVector]) -> float:
    """P(y=1) for a candidate pair under the hundred percent recall rules.

    x1=0 scores 0; x1=1 scores P(y=1|x1=1, x2); a missing x1 scores
    P(y=1|x2) = P(y=1|x1=1, x2) P(x1=1|x2).
    """
    p_x1eq1 = model.p_x1_given_x2(f.x2)
    match f.x1:
        case 0:
            return 0.0
        case 1:
            return 1.0 - score_special(
                1.0 - p_x1eq1, model.conditionals, clamp_epsilon=model.clamp_epsilon
            )
        case _:
            posterior = 1.0 - score_special(
                1.0 - p_x1eq1, model.conditionals, clamp_epsilon=model.clamp_epsilon
            )
            return score_missing_x1(p_x1eq1, posterior)


def estimate_p_x1_given_y0(
    master: Sequence[LinkageRecord],
    surrogate: SurrogateField = SurrogateField.GRAD_YEAR,
) -> float:
    """Probability that two different physicians agree on the surrogate field.

    Computed as sum(p_v^2) over the empirical frequencies p_v of the present
    values of the field.
    """
    values = [
        value
        for value in (getattr(record, surrogate.value) for record in master)
        if value is not None
    ]
    if len(values) < 2:  # noqa: PLR2004
        raise InsufficientData(
            f"Need at least two records with {surrogate.value}, got {len(values)}"
        )
    _, counts = np.unique(np.asarray(values), return_counts=True)
    frequencies = counts / counts.sum()
    return float(np.sum(frequencies**2))


def candidate_pairs(
    corpus: LinkageCorpus, surrogate: SurrogateField = SurrogateField.GRAD_YEAR
) -> list[Candidate]:
    """Every (update, master) pair that shares a block, in update order."""
    index = MasterIndex(corpus.master)
    candidates = [
        Candidate(update.id, record.id, extract_features(update, record, surrogate))
        for update in corpus.update
        for record in index.block(update.last)
    ]
    _LOGGER.debug(
        "Blocked %d updates into %d candidate pairs over %d last names",
        len(corpus.update),
        len(candidates),
        len(index),
    )
    return candidates


def run_matcher(
    corpus: LinkageCorpus, cfg: Optional[MatcherConfig] = None
) -> MatchResult:
    """Link every update record using the surrogate label only.

    The x1-from-x2 predictor is fitted on all candidate pairs with x1 present.
    P(x1=1|y=0) is counted from the master database. Only the threshold
    selection looks at the ground truth, and only for the holdout updates.
    """
    cfg = cfg or MatcherConfig()
    candidates = candidate_pairs(corpus, cfg.surrogate_field)
    if not candidates:
        raise InsufficientData("No update record shares a last name with the master")

    x1 = np.array(
        [np.nan if c.features.x1 is None else c.features.x1 for c in candidates]
    )
    X = np.vstack([c.features.x2.as_row() for c in candidates])
    observed = ~np.isnan(x1)
    model = fit_logistic_matrix(X[observed], x1[observed], cfg.train)

    conditionals = ClassConditionalX1(
        p_x1_given_y0=estimate_p_x1_given_y0(corpus.master, cfg.surrogate_field),
        p_x1_given_y1=1.0,
    )
    _LOGGER.debug(
        "Surrogate matcher: %d target and %d background pairs, P(x1=1|y=0)=%.5f",
        int(np.count_nonzero(x1 == 1.0)),
        int(np.count_nonzero(x1 == 0.0)),
        conditionals.p_x1_given_y0,
    )

    scores = surrogate_posterior_y1(
        model.predict_proba_matrix(X),
        x1,
        conditionals,
        mode=Mode.HUNDRED_PERCENT_RECALL,
        clamp_epsilon=cfg.clamp_epsilon,
    )

    holdout = _sample_ids(corpus, cfg.holdout_fraction, cfg.seed)
    return _decide(corpus, candidates, scores, holdout, cfg, model, conditionals)


def run_supervised_baseline(
    corpus: LinkageCorpus, labeled_fraction: float, cfg: Optional[MatcherConfig] = None
) -> MatchResult:
    """Link with a logistic regression from (x1, x2) to match / non-match.

    Trained on the candidate pairs of a labeled_fraction of the update records
    and evaluated on the rest. The threshold is chosen on the training updates.
    """
    cfg = cfg or MatcherConfig()
    if not 0.0 < labeled_fraction <= 1.0:
        raise DomainError(f"labeled_fraction={labeled_fraction} not in (0, 1]")
    candidates = candidate_pairs(corpus, cfg.surrogate_field)
    if not candidates:
        raise InsufficientData("No update record shares a last name with the master")

    x1 = np.array(
        [np.nan if c.features.x1 is None else c.features.x1 for c in candidates]
    )
    X = np.column_stack(
        (x1, np.vstack([c.features.x2.as_row() for c in candidates]))
    )
    labeled = _sample_ids(corpus, labeled_fraction, cfg.seed)
    in_training = np.array([c.update_id in labeled for c in candidates])
    y = np.array(
        [float(corpus.truth.get(c.update_id) == c.master_id) for c in candidates]
    )
    model = fit_logistic_matrix(X[in_training], y[in_training], cfg.train)
    _LOGGER.debug(
        "Supervised baseline trained on %d pairs from %d labelled updates",
        int(in_training.sum()),
        len(labeled),
    )

    scores = model.predict_proba_matrix(X)
    return _decide(
        corpus, candidates, scores, labeled, cfg, model, None, training_ids=labeled
    )


def write_decisions_csv(path: pathlib.Path, decisions: Sequence[MatchDecision]) -> None:
    """Write decisions as update_id, master_id, score rows."""
    with path.open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(DECISION_COLUMNS)
        for decision in decisions:
            writer.writerow(
                (decision.update_id, decision.master_id or "", repr(decision.score))
            )


def _decide(  # noqa: PLR0913
    corpus: LinkageCorpus,
    candidates: Sequence[Candidate],
    scores: FloatArray,
    labeled_ids: frozenset[str],
    cfg: MatcherConfig,
    model: LogisticModel,
    conditionals: Optional[ClassConditionalX1],
    *,
    training_ids: frozenset[str] = frozenset(),
) -> MatchResult:
    best = _best_per_update(candidates, scores)

    if cfg.threshold is not None:
        threshold = cfg.threshold
        consumed_ids = training_ids
    else:
        threshold = _select_threshold(corpus, best, labeled_ids, cfg)
        consumed_ids = training_ids | labeled_ids

    decisions: list[MatchDecision] = []
    for update in corpus.update:
        if update.id not in best:
            decisions.append(MatchDecision(update.id, None, 0.0))
            continue
        master_id, score = best[update.id]
        decisions.append(
            MatchDecision(update.id, master_id if score >= threshold else None, score)
        )

    evaluation_ids = frozenset(r.id for r in corpus.update) - consumed_ids
    if not evaluation_ids:
        _LOGGER.warning("Every update was labelled; evaluating on the training set")
        evaluation_ids = frozenset(r.id for r in corpus.update)

    return MatchResult(
        decisions=decisions,
        threshold=threshold,
        evaluation_ids=evaluation_ids,
        scored=_scored_best(corpus, best, evaluation_ids),
        model=model,
        conditionals=conditionals,
    )


def _best_per_update(
    candidates: Sequence[Candidate], scores: FloatArray
) -> dict[str, tuple[str, float]]:
    """Highest scoring candidate per update, ties going to the smallest master id."""
    best: dict[str, tuple[str, float]] = {}
    for candidate, score in zip(candidates, scores.tolist(), strict=True):
        current = best.get(candidate.update_id)
        if (
            current is None
            or score > current[1]
            or (score == current[1] and candidate.master_id < current[0])
        ):
            best[candidate.update_id] = (candidate.master_id, float(score))
    return best


def _select_threshold(
    corpus: LinkageCorpus,
    best: dict[str, tuple[str, float]],
    labeled_ids: frozenset[str],
    cfg: MatcherConfig,
) -> float:
    scored = _scored_best(corpus, best, labeled_ids)
    try:
        threshold = select_threshold(scored, cfg.objective)
    except InsufficientLabels:
        _LOGGER.warning(
            "Holdout of %d updates lacks a label; using threshold %s",
            len(scored),
            cfg.fallback_threshold,
        )
        return cfg.fallback_threshold
    _LOGGER.debug(
        "Selected threshold %.6f (%s %.4f) on %d holdout updates",
        threshold.value,
        threshold.objective.value,
        threshold.objective_value,
        len(scored),
    )
    return threshold.value


def _scored_best(
    corpus: LinkageCorpus,
    best: dict[str, tuple[str, float]],
    ids: frozenset[str],
) -> list[tuple[float, int]]:
    """(best score, whether the best candidate is the true match) per update."""
    return [
        (score, int(corpus.truth.get(update_id) == master_id))
        for update_id, (master_id, score) in sorted(best.items())
        if update_id in ids
    ]


def _sample_ids(corpus: LinkageCorpus, fraction: float, seed: int) -> frozenset[str]:
    ids = sorted(record.id for record in corpus.update)
    count = round(len(ids) * fraction)
    if fraction > 0.0:
        count = max(count, 1)
    chosen = np.random.default_rng(seed).choice(len(ids), size=count, replace=False)
    return frozenset(ids[i] for i in chosen.tolist())


def _optional_str(value: Optional[int]) -> Optional[str]:
    return None if value is None else str(value)
