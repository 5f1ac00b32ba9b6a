"""Base learners estimating P(x1=1|x2).

Two estimators are provided: a logistic regression fitted by full-batch
gradient descent, and a binned (histogram) estimator for one-dimensional x2.
Missing feature values are replaced by the training mean of the feature.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
import numpy.typing as npt
from scipy.special import expit

from .const import (
    DEFAULT_L2_PENALTY,
    DEFAULT_LEARNING_RATE,
    DEFAULT_MAX_EPOCHS,
    DEFAULT_SEED,
    DEFAULT_TOLERANCE,
)
from .errors import (
    DimensionMismatch,
    DomainError,
    EmptyData,
    NonFiniteLoss,
    SingleClassData,
)

_LOGGER = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
BoolArray = npt.NDArray[np.bool_]

_LOG_EVERY_EPOCHS = 500


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Real-valued features with a parallel mask marking missing entries."""

    values: FloatArray
    missing_mask: BoolArray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        mask = np.asarray(self.missing_mask, dtype=np.bool_)
        if values.shape != mask.shape or values.ndim != 1:
            raise DimensionMismatch(
                f"values {values.shape} and missing_mask {mask.shape} differ"
            )
        if not np.all(np.isfinite(values[~mask])):
            raise DomainError("Present feature values must be finite")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "missing_mask", mask)

    @classmethod
    def from_optional(cls, values: Sequence[float | None]) -> FeatureVector:
        """Build from a sequence where None marks a missing value."""
        mask = np.array([v is None for v in values], dtype=np.bool_)
        filled = np.array([0.0 if v is None else v for v in values], dtype=np.float64)
        return cls(filled, mask)

    def __len__(self) -> int:
        return len(self.values)

    def as_row(self) -> FloatArray:
        """The values with NaN in the missing positions."""
        return np.where(self.missing_mask, np.nan, self.values)


@dataclass(frozen=True)
class TrainConfig:
    """Gradient descent settings for fit_logistic."""

    learning_rate: float = DEFAULT_LEARNING_RATE
    l2_penalty: float = DEFAULT_L2_PENALTY
    max_epochs: int = DEFAULT_MAX_EPOCHS
    tolerance: float = DEFAULT_TOLERANCE
    # Initialisation is all zeros, so the seed is echoed but does not change
    # the fitted model.
    seed: int = DEFAULT_SEED

    def __post_init__(self) -> None:
        if self.learning_rate <= 0.0:
            raise DomainError("learning_rate must be positive")
        if self.l2_penalty < 0.0:
            raise DomainError("l2_penalty must be non-negative")
        if self.max_epochs < 1:
            raise DomainError("max_epochs must be at least 1")
        if self.tolerance <= 0.0:
            raise DomainError("tolerance must be positive")


@dataclass(frozen=True, eq=False)
class LogisticModel:
    """A fitted logistic regression P(x1=1|x2) = sigmoid(w.x + b)."""

    weights: FloatArray
    bias: float
    # Imputation values for missing features, frozen at fit time.
    feature_means: FloatArray
    trained_on: int
    config: TrainConfig = field(default_factory=TrainConfig)
    epochs: int = 0
    loss_history: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self) -> None:
        weights = np.asarray(self.weights, dtype=np.float64)
        means = np.asarray(self.feature_means, dtype=np.float64)
        if weights.shape != means.shape:
            raise DimensionMismatch("weights and feature_means differ in length")
        if not np.all(np.isfinite(weights)) or not np.all(np.isfinite(means)):
            raise DomainError("Model parameters must be finite")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "feature_means", means)

    @property
    def dimension(self) -> int:
        return len(self.weights)

    def predict_proba(self, x2: FeatureVector) -> float:
        """P(x1=1|x2) with missing entries imputed from the training means."""
        return predict_proba(self, x2)

    def predict_proba_matrix(self, X: FloatArray) -> FloatArray:
        """Vectorised predictions for rows of X, NaN marking missing values."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.dimension:
            raise DimensionMismatch(
                f"Expected {self.dimension} features, got {X.shape[1]}"
            )
        imputed = np.where(np.isnan(X), self.feature_means, X)
        return np.asarray(expit(imputed @ self.weights + self.bias), dtype=np.float64)

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": "logistic",
                "weights": self.weights.tolist(),
                "bias": self.bias,
                "feature_means": self.feature_means.tolist(),
                "trained_on": self.trained_on,
                "epochs": self.epochs,
                "config": asdict(self.config),
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, document: str) -> LogisticModel:
        data: dict[str, Any] = json.loads(document)
        return cls(
            weights=np.asarray(data["weights"], dtype=np.float64),
            bias=float(data["bias"]),
            feature_means=np.asarray(data["feature_means"], dtype=np.float64),
            trained_on=int(data["trained_on"]),
            config=TrainConfig(**data["config"]),
            epochs=int(data.get("epochs", 0)),
        )


@dataclass(frozen=True, eq=False)
class HistogramModel:
    """Per-bin add-one smoothed estimates of P(x1=1|x2) for scalar x2."""

    x2_range: tuple[float, float]
    positives: npt.NDArray[np.int64]
    totals: npt.NDArray[np.int64]

    @property
    def bins(self) -> int:
        return len(self.totals)

    @property
    def estimates(self) -> FloatArray:
        """(n1 + 1) / (n + 2) for every bin; empty bins give 0.5."""
        return np.asarray((self.positives + 1.0) / (self.totals + 2.0))

    def bin_index(self, x2: FloatArray) -> npt.NDArray[np.intp]:
        """Map x2 values to bins; out-of-range values land in the edge bins."""
        values = np.asarray(x2, dtype=np.float64)
        if not np.all(np.isfinite(values)):
            raise DomainError("x2 must be finite")
        low, high = self.x2_range
        scaled = (values - low) / (high - low)
        index = np.floor(scaled * self.bins).astype(np.intp)
        return np.clip(index, 0, self.bins - 1)

    def predict_proba(self, x2: float) -> float:
        return float(self.estimates[self.bin_index(np.asarray([x2]))[0]])

    def predict_proba_many(self, x2: FloatArray) -> FloatArray:
        return np.asarray(self.estimates[self.bin_index(x2)], dtype=np.float64)

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": "histogram",
                "x2_range": list(self.x2_range),
                "positives": self.positives.tolist(),
                "totals": self.totals.tolist(),
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, document: str) -> HistogramModel:
        data: dict[str, Any] = json.loads(document)
        low, high = data["x2_range"]
        return cls(
            x2_range=(float(low), float(high)),
            positives=np.asarray(data["positives"], dtype=np.int64),
            totals=np.asarray(data["totals"], dtype=np.int64),
        )


def design_matrix(features: Sequence[FeatureVector]) -> FloatArray:
    """Stack feature vectors into a matrix with NaN for missing values."""
    if not features:
        raise EmptyData("No feature vectors")
    dimension = len(features[0])
    if any(len(fv) != dimension for fv in features):
        raise DimensionMismatch("Feature vectors differ in length")
    return np.vstack([fv.as_row() for fv in features])


def logistic_loss(
    weights: FloatArray, bias: float, X: FloatArray, y: FloatArray, l2_penalty: float
) -> float:
    """Mean negative log-likelihood plus (l2/2)|w|^2; the bias is unpenalised."""
    z = X @ weights + bias
    nll = np.mean(np.logaddexp(0.0, z) - y * z)
    return float(nll + 0.5 * l2_penalty * np.dot(weights, weights))


def logistic_gradient(
    weights: FloatArray, bias: float, X: FloatArray, y: FloatArray, l2_penalty: float
) -> tuple[FloatArray, float]:
    """Gradient of logistic_loss with respect to (weights, bias)."""
    residual = expit(X @ weights + bias) - y
    grad_w = X.T @ residual / len(y) + l2_penalty * weights
    return np.asarray(grad_w, dtype=np.float64), float(np.mean(residual))


def fit_logistic(
    data: Sequence[tuple[FeatureVector, int]], cfg: TrainConfig | None = None
) -> LogisticModel:
    """Fit P(x1=1|x2) by full-batch gradient descent.

    Samples whose x1 is missing must already have been removed. Missing x2
    entries are imputed with the mean of the present values of that feature.
    """
    if not data:
        raise EmptyData("No training data")
    X = design_matrix([fv for fv, _ in data])
    y = np.asarray([label for _, label in data], dtype=np.float64)
    return fit_logistic_matrix(X, y, cfg)


def fit_logistic_matrix(
    X: FloatArray, y: FloatArray, cfg: TrainConfig | None = None
) -> LogisticModel:
    """fit_logistic for a prepared matrix with NaN marking missing values."""
    cfg = cfg or TrainConfig()
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if len(y) == 0:
        raise EmptyData("No training data")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise DomainError("Labels must be 0 or 1")
    if np.all(y == y[0]):
        raise SingleClassData(f"All {len(y)} training labels are {int(y[0])}")

    feature_means = _column_means(X)
    X = np.where(np.isnan(X), feature_means, X)

    weights = np.zeros(X.shape[1])
    bias = 0.0
    history: list[float] = []
    epoch = 0
    for epoch in range(1, cfg.max_epochs + 1):
        loss = logistic_loss(weights, bias, X, y, cfg.l2_penalty)
        if not np.isfinite(loss):
            raise NonFiniteLoss(
                f"Loss diverged at epoch {epoch}; learning rate "
                f"{cfg.learning_rate} is too high"
            )
        history.append(loss)

        grad_w, grad_b = logistic_gradient(weights, bias, X, y, cfg.l2_penalty)
        if max(float(np.max(np.abs(grad_w), initial=0.0)), abs(grad_b)) < cfg.tolerance:
            break
        weights = weights - cfg.learning_rate * grad_w
        bias -= cfg.learning_rate * grad_b

        if epoch % _LOG_EVERY_EPOCHS == 0:
            _LOGGER.debug("Epoch %d: loss %.10f", epoch, loss)
    else:
        _LOGGER.debug("Stopped after max_epochs=%d", cfg.max_epochs)

    if not np.all(np.isfinite(weights)) or not np.isfinite(bias):
        raise NonFiniteLoss("Parameters diverged")

    _LOGGER.debug(
        "Fitted logistic model on %d samples in %d epochs (loss %.6f)",
        len(y),
        epoch,
        history[-1],
    )
    return LogisticModel(
        weights=weights,
        bias=bias,
        feature_means=feature_means,
        trained_on=len(y),
        config=cfg,
        epochs=epoch,
        loss_history=tuple(history),
    )


def predict_proba(model: LogisticModel, x: FeatureVector) -> float:
    """sigmoid(w.x + b) with missing entries imputed from the training means."""
    if len(x) != model.dimension:
        raise DimensionMismatch(f"Expected {model.dimension} features, got {len(x)}")
    imputed = np.where(x.missing_mask, model.feature_means, x.values)
    return float(expit(np.dot(model.weights, imputed) + model.bias))


def fit_histogram(
    data: Sequence[tuple[float, int]],
    bins: int,
    x2_range: tuple[float, float],
) -> HistogramModel:
    """Fit the binned estimator from (x2, x1) pairs."""
    if not data:
        raise EmptyData("No training data")
    pairs = np.asarray(data, dtype=np.float64)
    return fit_histogram_arrays(pairs[:, 0], pairs[:, 1], bins, x2_range)


def fit_histogram_arrays(
    x2: FloatArray,
    x1: npt.ArrayLike,
    bins: int,
    x2_range: tuple[float, float],
) -> HistogramModel:
    """fit_histogram for parallel arrays of x2 and x1."""
    x2 = np.asarray(x2, dtype=np.float64)
    labels = np.asarray(x1)
    if len(x2) == 0:
        raise EmptyData("No training data")
    if len(labels) != len(x2):
        raise DimensionMismatch("x2 and x1 differ in length")
    if bins < 2:  # noqa: PLR2004
        raise DomainError(f"Need at least 2 bins, got {bins}")
    low, high = x2_range
    if not high > low:
        raise DomainError(f"Empty range {x2_range}")

    model = HistogramModel(
        x2_range=(float(low), float(high)),
        positives=np.zeros(bins, dtype=np.int64),
        totals=np.zeros(bins, dtype=np.int64),
    )
    index = model.bin_index(x2)
    positives = np.bincount(index, weights=(labels == 1), minlength=bins)
    totals = np.bincount(index, minlength=bins)

    empty = int(np.count_nonzero(totals == 0))
    if empty:
        _LOGGER.warning("%d of %d histogram bins are empty", empty, bins)
    return HistogramModel(
        x2_range=model.x2_range,
        positives=positives.astype(np.int64),
        totals=totals.astype(np.int64),
    )


def _column_means(X: FloatArray) -> FloatArray:
    present = ~np.isnan(X)
    counts = present.sum(axis=0)
    sums = np.where(present, X, 0.0).sum(axis=0)
    # A feature that is never observed is imputed with zero.
    return np.divide(sums, counts, out=np.zeros(X.shape[1]), where=counts > 0)
