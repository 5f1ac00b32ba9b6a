"""Surrogate learning identities.

When the features split into two blocks x1 and x2 that are class-conditionally
independent, the class posterior can be rebuilt from P(x1|x2), which is learnt
from unlabelled data, and P(x1|y), which only needs a small labelled sample.

All functions accept either plain floats or numpy arrays and return the same
shape they were given.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, replace
from typing import Generic, Protocol, TypeVar, overload

import numpy as np
import numpy.typing as npt

from .const import DEFAULT_CLAMP_EPSILON, MAX_CLAMP_EPSILON, Mode, Objective
from .errors import DegenerateConditionals, DomainError, InsufficientLabels

_LOGGER = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

# Conditionals closer than this are treated as identical.
_EQUALITY_TOLERANCE = 1e-12

X2_contra = TypeVar("X2_contra", contravariant=True)
X2 = TypeVar("X2")


class X1Predictor(Protocol[X2_contra]):
    """A fitted base learner estimating P(x1=1|x2)."""

    def predict_proba(self, x2: X2_contra) -> float:
        """Return the estimate of P(x1=1|x2)."""
        ...


@dataclass(frozen=True)
class ClassConditionalX1:
    """P(x1=1|y) for both classes."""

    p_x1_given_y0: float
    p_x1_given_y1: float

    def __post_init__(self) -> None:
        for name in ("p_x1_given_y0", "p_x1_given_y1"):
            value = getattr(self, name)
            if not np.isfinite(value) or not 0.0 <= value <= 1.0:
                raise DomainError(f"{name}={value} is not a probability")
        if self.margin < _EQUALITY_TOLERANCE:
            raise DegenerateConditionals(
                f"P(x1|y=0) and P(x1|y=1) are both {self.p_x1_given_y0}"
            )

    @property
    def margin(self) -> float:
        """Absolute difference between the two class conditionals."""
        return abs(self.p_x1_given_y1 - self.p_x1_given_y0)

    def swapped(self) -> ClassConditionalX1:
        """The same conditionals with the class labels exchanged."""
        return ClassConditionalX1(self.p_x1_given_y1, self.p_x1_given_y0)


@dataclass(frozen=True)
class Threshold:
    """A decision threshold on the P(y=1|...) scale."""

    value: float
    objective: Objective
    objective_value: float = float("nan")

    def __post_init__(self) -> None:
        if not 0.0 <= self.value <= 1.0:
            raise DomainError(f"Threshold {self.value} outside [0, 1]")


@dataclass(frozen=True)
class SurrogateModel(Generic[X2]):
    """Everything needed to score a sample: P(x1|y) plus a P(x1|x2) predictor.

    In hundred-percent-recall mode P(x1=1|y=1) is fixed at exactly one,
    regardless of what was estimated.
    """

    conditionals: ClassConditionalX1
    predictor: X1Predictor[X2]
    mode: Mode = Mode.GENERAL
    clamp_epsilon: float = DEFAULT_CLAMP_EPSILON

    def __post_init__(self) -> None:
        _check_epsilon(self.clamp_epsilon)
        if (
            self.mode == Mode.HUNDRED_PERCENT_RECALL
            and self.conditionals.p_x1_given_y1 != 1.0
        ):
            _LOGGER.debug(
                "Forcing P(x1=1|y=1) from %s to 1 for hundred percent recall",
                self.conditionals.p_x1_given_y1,
            )
            object.__setattr__(
                self, "conditionals", replace(self.conditionals, p_x1_given_y1=1.0)
            )

    def p_x1_given_x2(self, x2: X2) -> float:
        """The clamped predictor estimate of P(x1=1|x2)."""
        return _clamp(self.predictor.predict_proba(x2), self.clamp_epsilon)

    def posterior_y1(self, x1: int | None, x2: X2) -> float:
        """P(y=1|x1, x2), or P(y=1|x2) when x1 is missing."""
        x1_value = np.nan if x1 is None else float(x1)
        return float(
            surrogate_posterior_y1(
                np.array([self.p_x1_given_x2(x2)]),
                np.array([x1_value]),
                self.conditionals,
                mode=self.mode,
                clamp_epsilon=self.clamp_epsilon,
            )[0]
        )


@overload
def posterior_general(
    p_x1_given_x2: float,
    cond: ClassConditionalX1,
    x1_observed: int,
    *,
    clamp_epsilon: float = ...,
    clamp: bool = ...,
) -> float: ...


@overload
def posterior_general(
    p_x1_given_x2: FloatArray,
    cond: ClassConditionalX1,
    x1_observed: int | npt.NDArray[np.int_],
    *,
    clamp_epsilon: float = ...,
    clamp: bool = ...,
) -> FloatArray: ...


def posterior_general(
    p_x1_given_x2: float | FloatArray,
    cond: ClassConditionalX1,
    x1_observed: int | npt.NDArray[np.int_],
    *,
    clamp_epsilon: float = DEFAULT_CLAMP_EPSILON,
    clamp: bool = True,
) -> float | FloatArray:
    """Reconstruct P(y=0|x1, x2) from P(x1=1|x2) and P(x1=1|y).

    P(y=0|x1,x2) = P(x1|y=0) / P(x1|x2) * (P(x1|y=1) - P(x1|x2))
                   / (P(x1|y=1) - P(x1|y=0))

    Args:
        p_x1_given_x2: P(x1=1|x2). Flipped internally when x1_observed is 0.
        cond: the class conditionals P(x1=1|y).
        x1_observed: the observed value of the binary surrogate.
        clamp_epsilon: clamping margin for the probabilities and the
            degeneracy tolerance for the conditionals.
        clamp: when false the raw identity is returned without clamping
            inputs or clipping the result to [0, 1].
    """
    _check_epsilon(clamp_epsilon)
    p = np.asarray(p_x1_given_x2, dtype=np.float64)
    x1 = np.asarray(x1_observed)
    _require_open_unit(p, "p_x1_given_x2")
    _require_binary(x1, "x1_observed")
    if cond.margin < clamp_epsilon:
        raise DegenerateConditionals(
            f"|P(x1|y=1) - P(x1|y=0)| = {cond.margin} is below {clamp_epsilon}"
        )

    observed = x1 == 1
    p_obs = np.where(observed, p, 1.0 - p)
    c0 = np.where(observed, cond.p_x1_given_y0, 1.0 - cond.p_x1_given_y0)
    c1 = np.where(observed, cond.p_x1_given_y1, 1.0 - cond.p_x1_given_y1)
    if clamp:
        p_obs = _clamp(p_obs, clamp_epsilon)
        c0 = _clamp(c0, clamp_epsilon)
        c1 = _clamp(c1, clamp_epsilon)

    result = (c0 / p_obs) * (c1 - p_obs) / (c1 - c0)
    if clamp:
        result = np.clip(result, 0.0, 1.0)
    return _unwrap(result, p, x1)


@overload
def score_special(
    p_x1eq0_given_x2: float,
    cond: ClassConditionalX1,
    *,
    clamp_epsilon: float = ...,
    clamp: bool = ...,
) -> float: ...


@overload
def score_special(
    p_x1eq0_given_x2: FloatArray,
    cond: ClassConditionalX1,
    *,
    clamp_epsilon: float = ...,
    clamp: bool = ...,
) -> FloatArray: ...


def score_special(
    p_x1eq0_given_x2: float | FloatArray,
    cond: ClassConditionalX1,
    *,
    clamp_epsilon: float = DEFAULT_CLAMP_EPSILON,
    clamp: bool = True,
) -> float | FloatArray:
    """P(y=0|x1=1, x2) for a hundred percent recall surrogate.

    P(y=0|x1=1,x2) = P(x1=1|y=0) / P(x1=0|y=0) * P(x1=0|x2) / (1 - P(x1=0|x2))

    The result is strictly increasing in P(x1=0|x2), so any threshold on it is
    a threshold on the background probability.
    """
    _check_epsilon(clamp_epsilon)
    p = np.asarray(p_x1eq0_given_x2, dtype=np.float64)
    if clamp:
        _require_closed_unit(p, "p_x1eq0_given_x2")
        p = _clamp(p, clamp_epsilon)
    else:
        _require_open_unit(p, "p_x1eq0_given_x2")

    p_x1eq0_given_y0 = 1.0 - cond.p_x1_given_y0
    if p_x1eq0_given_y0 < clamp_epsilon:
        raise DegenerateConditionals(
            f"P(x1=0|y=0) = {p_x1eq0_given_y0} is below {clamp_epsilon}"
        )

    c0 = cond.p_x1_given_y0
    if clamp:
        c0 = _clamp(c0, clamp_epsilon)
    result = (c0 / (1.0 - c0)) * (p / (1.0 - p))
    if clamp:
        result = np.clip(result, 0.0, 1.0)
    return _unwrap(result, p)


@overload
def score_missing_x1(
    p_x1eq1_given_x2: float, posterior_y1_given_x1eq1_x2: float
) -> float: ...


@overload
def score_missing_x1(
    p_x1eq1_given_x2: FloatArray, posterior_y1_given_x1eq1_x2: FloatArray
) -> FloatArray: ...


def score_missing_x1(
    p_x1eq1_given_x2: float | FloatArray,
    posterior_y1_given_x1eq1_x2: float | FloatArray,
) -> float | FloatArray:
    """P(y=1|x2) for a sample whose surrogate x1 is missing.

    Only valid when no positive has x1=0, so P(y=1|x2) = P(y=1|x1=1,x2) P(x1=1|x2).
    """
    p = np.asarray(p_x1eq1_given_x2, dtype=np.float64)
    posterior = np.asarray(posterior_y1_given_x1eq1_x2, dtype=np.float64)
    _require_closed_unit(p, "p_x1eq1_given_x2")
    _require_closed_unit(posterior, "posterior_y1_given_x1eq1_x2")
    return _unwrap(posterior * p, p, posterior)


def surrogate_posterior_y1(
    p_x1eq1_given_x2: FloatArray,
    x1: FloatArray,
    cond: ClassConditionalX1,
    *,
    mode: Mode = Mode.GENERAL,
    clamp_epsilon: float = DEFAULT_CLAMP_EPSILON,
) -> FloatArray:
    """Vectorised P(y=1|x1, x2) for a batch of samples.

    Args:
        p_x1eq1_given_x2: predictor outputs P(x1=1|x2), one per sample.
        x1: observed surrogate values, NaN where missing.
        cond: the class conditionals P(x1=1|y).
        mode: general reconstruction, or the hundred percent recall rules
            (x1=0 scores 0, x1=1 uses the special-case score, missing x1
            uses the marginal score).
        clamp_epsilon: clamping margin.
    """
    p1 = _clamp(np.asarray(p_x1eq1_given_x2, dtype=np.float64), clamp_epsilon)
    x1 = np.asarray(x1, dtype=np.float64)
    missing = np.isnan(x1)
    if not np.all(np.isin(x1[~missing], (0.0, 1.0))):
        raise DomainError("x1 must be 0, 1 or missing")

    if mode == Mode.HUNDRED_PERCENT_RECALL:
        posterior_x1eq1 = 1.0 - score_special(
            1.0 - p1, cond, clamp_epsilon=clamp_epsilon
        )
        return np.select(
            [missing, x1 == 1.0],
            [score_missing_x1(p1, posterior_x1eq1), posterior_x1eq1],
            default=0.0,
        )

    posterior_x1eq1 = 1.0 - posterior_general(
        p1, cond, np.ones_like(p1, dtype=np.int_), clamp_epsilon=clamp_epsilon
    )
    posterior_x1eq0 = 1.0 - posterior_general(
        p1, cond, np.zeros_like(p1, dtype=np.int_), clamp_epsilon=clamp_epsilon
    )
    marginal = posterior_x1eq1 * p1 + posterior_x1eq0 * (1.0 - p1)
    return np.select(
        [missing, x1 == 1.0], [marginal, posterior_x1eq1], default=posterior_x1eq0
    )


def estimate_conditionals(labeled: Iterable[tuple[int, int]]) -> ClassConditionalX1:
    """Estimate P(x1=1|y) by counting over a labelled sample of (x1, y) pairs."""
    pairs = np.asarray(list(labeled), dtype=np.int_).reshape(-1, 2)
    x1, y = pairs[:, 0], pairs[:, 1]
    n_y0 = int(np.count_nonzero(y == 0))
    n_y1 = int(np.count_nonzero(y == 1))
    if n_y0 == 0 or n_y1 == 0:
        raise InsufficientLabels(
            f"Need both classes to count P(x1|y), got {n_y0} and {n_y1}"
        )
    cond = ClassConditionalX1(
        p_x1_given_y0=float(np.count_nonzero((x1 == 1) & (y == 0)) / n_y0),
        p_x1_given_y1=float(np.count_nonzero((x1 == 1) & (y == 1)) / n_y1),
    )
    _LOGGER.debug("Counted %s from %d labelled samples", cond, len(pairs))
    return cond


def split_target_background(
    x1: Sequence[int] | npt.NDArray[np.int_],
) -> tuple[npt.NDArray[np.intp], npt.NDArray[np.intp]]:
    """Indices of target (x1=1) and background (x1=0) samples."""
    values = np.asarray(x1)
    return np.flatnonzero(values == 1), np.flatnonzero(values == 0)


def select_threshold(
    scores: Sequence[tuple[float, int]], objective: Objective = Objective.F1
) -> Threshold:
    """Choose the threshold maximising an objective on a labelled sample.

    Candidates are 0, 1 and the midpoints between consecutive distinct scores.
    A sample is predicted positive when its score is at least the threshold.
    Ties go to the smallest threshold.
    """
    values = np.asarray([score for score, _ in scores], dtype=np.float64)
    labels = np.asarray([label for _, label in scores], dtype=np.int_)
    if not np.any(labels == 1) or not np.any(labels == 0):
        raise InsufficientLabels("Threshold selection needs both labels present")

    distinct = np.unique(values)
    candidates = np.unique(
        np.concatenate(([0.0], (distinct[:-1] + distinct[1:]) / 2.0, [1.0]))
    )
    objective_values = objective_at_thresholds(values, labels, candidates, objective)

    # argmax returns the first maximum, i.e. the smallest threshold.
    best = int(np.argmax(objective_values))
    return Threshold(
        value=float(candidates[best]),
        objective=objective,
        objective_value=float(objective_values[best]),
    )


def objective_at_thresholds(
    values: FloatArray,
    labels: npt.NDArray[np.int_],
    thresholds: FloatArray,
    objective: Objective,
) -> FloatArray:
    """Evaluate F1 or accuracy of the rule score >= t for every threshold t."""
    order = np.argsort(values, kind="stable")
    sorted_values = values[order]
    cumulative_pos = np.concatenate(([0], np.cumsum(labels[order] == 1)))
    n = len(values)
    total_pos = int(cumulative_pos[-1])

    below = np.searchsorted(sorted_values, thresholds, side="left")
    predicted_pos = n - below
    tp = total_pos - cumulative_pos[below]
    fp = predicted_pos - tp
    fn = total_pos - tp
    tn = n - tp - fp - fn

    if objective == Objective.F1:
        return np.asarray(2.0 * tp / (2.0 * tp + fp + fn), dtype=np.float64)
    return np.asarray((tp + tn) / n, dtype=np.float64)


def _check_epsilon(clamp_epsilon: float) -> None:
    if not 0.0 < clamp_epsilon <= MAX_CLAMP_EPSILON:
        raise DomainError(
            f"clamp_epsilon={clamp_epsilon} outside (0, {MAX_CLAMP_EPSILON}]"
        )


@overload
def _clamp(p: float, epsilon: float) -> float: ...


@overload
def _clamp(p: FloatArray, epsilon: float) -> FloatArray: ...


def _clamp(p: float | FloatArray, epsilon: float) -> float | FloatArray:
    if isinstance(p, float):
        return min(max(p, epsilon), 1.0 - epsilon)
    return np.clip(p, epsilon, 1.0 - epsilon)


def _require_open_unit(p: FloatArray, name: str) -> None:
    if not np.all((p > 0.0) & (p < 1.0)):
        raise DomainError(f"{name} must lie in (0, 1)")


def _require_closed_unit(p: FloatArray, name: str) -> None:
    if not np.all((p >= 0.0) & (p <= 1.0)):
        raise DomainError(f"{name} must lie in [0, 1]")


def _require_binary(x: npt.NDArray[np.generic], name: str) -> None:
    if not np.all((x == 0) | (x == 1)):
        raise DomainError(f"{name} must be 0 or 1")


def _unwrap(
    result: FloatArray, *inputs: npt.NDArray[np.generic]
) -> float | FloatArray:
    # Scalars in, scalar out.
    if all(np.ndim(value) == 0 for value in inputs):
        return float(result)
    return np.asarray(result, dtype=np.float64)
