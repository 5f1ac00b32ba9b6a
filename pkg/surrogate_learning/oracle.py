"""Exact probability computations over small discrete joints.

A DiscreteJoint is a table P(x1, x2, y) with binary x1 and y and x2 taking K
values. Every conditional the surrogate formulas need can be computed from it
by summation, which makes it the reference the formulas are checked against.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Any

import numpy as np
import numpy.typing as npt

from .core_math import ClassConditionalX1
from .errors import DomainError, InvalidSimplex, ZeroMarginal

_LOGGER = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

# Tables and simplex vectors must sum to one within this tolerance.
_SUM_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class CIJointSpec:
    """Parameters of a joint in which x1 and x2 are independent given y."""

    # P(y=0)
    p_y0: float
    # (P(x1=1|y=0), P(x1=1|y=1))
    p_x1_given_y: tuple[float, float]
    # (P(x2|y=0), P(x2|y=1)), each a length-K simplex vector
    p_x2_given_y: tuple[FloatArray, FloatArray]

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_y0 <= 1.0:
            raise InvalidSimplex(f"P(y=0)={self.p_y0} is not a probability")
        if not all(0.0 <= p <= 1.0 for p in self.p_x1_given_y):
            raise InvalidSimplex(f"P(x1|y)={self.p_x1_given_y} are not probabilities")

        vectors = tuple(np.asarray(v, dtype=np.float64) for v in self.p_x2_given_y)
        if len(vectors) != 2 or vectors[0].shape != vectors[1].shape:  # noqa: PLR2004
            raise InvalidSimplex("P(x2|y) needs two vectors of equal length")
        for vector in vectors:
            _check_simplex(vector, "P(x2|y)")
        object.__setattr__(self, "p_x2_given_y", vectors)

    @property
    def k(self) -> int:
        """Cardinality of the discretised x2."""
        return len(self.p_x2_given_y[0])


@dataclass(frozen=True, eq=False)
class DiscreteJoint:
    """The table P(x1, x2, y) indexed [x1, x2, y], shape (2, K, 2)."""

    table: FloatArray

    def __post_init__(self) -> None:
        table = np.array(self.table, dtype=np.float64)
        if table.ndim != 3 or table.shape[0] != 2 or table.shape[2] != 2:  # noqa: PLR2004
            raise InvalidSimplex(f"Joint table has shape {table.shape}, not (2, K, 2)")
        _check_simplex(table, "joint table")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @property
    def k(self) -> int:
        """Cardinality of the discretised x2."""
        return int(self.table.shape[1])

    def to_json(self) -> str:
        """Serialise as dimensions plus the flat row-major table."""
        return json.dumps(
            {"dimensions": list(self.table.shape), "table": self.table.ravel().tolist()}
        )

    @classmethod
    def from_json(cls, document: str) -> DiscreteJoint:
        data: dict[str, Any] = json.loads(document)
        return cls(np.asarray(data["table"]).reshape(data["dimensions"]))


def joint_from_ci_spec(spec: CIJointSpec) -> DiscreteJoint:
    """Build table[x1, x2, y] = P(y) P(x1|y) P(x2|y)."""
    p_y = np.array([spec.p_y0, 1.0 - spec.p_y0])
    p_x1eq1 = np.asarray(spec.p_x1_given_y)
    p_x1_given_y = np.stack([1.0 - p_x1eq1, p_x1eq1])  # [x1, y]
    p_x2_given_y = np.stack(spec.p_x2_given_y, axis=1)  # [x2, y]
    table = p_y[None, None, :] * p_x1_given_y[:, None, :] * p_x2_given_y[None, :, :]
    return DiscreteJoint(table)


def ci_spec_from_joint(j: DiscreteJoint) -> CIJointSpec:
    """Recover P(y), P(x1|y) and P(x2|y) from a joint table."""
    p_y = j.table.sum(axis=(0, 1))
    if np.any(p_y == 0.0):
        raise ZeroMarginal("A class has zero probability")
    p_x1eq1_given_y = j.table[1].sum(axis=0) / p_y
    p_x2_given_y = j.table.sum(axis=0) / p_y
    return CIJointSpec(
        p_y0=float(p_y[0]),
        p_x1_given_y=(float(p_x1eq1_given_y[0]), float(p_x1eq1_given_y[1])),
        p_x2_given_y=(p_x2_given_y[:, 0], p_x2_given_y[:, 1]),
    )


def cond_x1_given_x2(j: DiscreteJoint, x2: int) -> float:
    """Exact P(x1=1|x2)."""
    cells = j.table[:, _check_x2(j, x2), :]
    marginal = cells.sum()
    if marginal == 0.0:
        raise ZeroMarginal(f"P(x2={x2}) is zero")
    return float(cells[1].sum() / marginal)


def cond_y_given_x1_x2(j: DiscreteJoint, x1: int, x2: int) -> float:
    """Exact P(y=0|x1, x2)."""
    if x1 not in (0, 1):
        raise DomainError(f"x1={x1} is not binary")
    cells = j.table[x1, _check_x2(j, x2), :]
    marginal = cells.sum()
    if marginal == 0.0:
        raise ZeroMarginal(f"P(x1={x1}, x2={x2}) is zero")
    return float(cells[0] / marginal)


def cond_y_given_x2(j: DiscreteJoint, x2: int) -> float:
    """Exact P(y=1|x2), marginalising x1."""
    cells = j.table[:, _check_x2(j, x2), :]
    marginal = cells.sum()
    if marginal == 0.0:
        raise ZeroMarginal(f"P(x2={x2}) is zero")
    return float(cells[:, 1].sum() / marginal)


def cond_x1_given_y(j: DiscreteJoint) -> ClassConditionalX1:
    """Exact P(x1=1|y) for both classes.

    Raises DegenerateConditionals when the two are equal, since x1 then carries
    no information about the class.
    """
    p_y = j.table.sum(axis=(0, 1))
    if np.any(p_y == 0.0):
        raise ZeroMarginal("A class has zero probability")
    p_x1eq1_y = j.table[1].sum(axis=0)
    return ClassConditionalX1(
        p_x1_given_y0=float(p_x1eq1_y[0] / p_y[0]),
        p_x1_given_y1=float(p_x1eq1_y[1] / p_y[1]),
    )


def x1_given_x2_table(j: DiscreteJoint) -> FloatArray:
    """P(x1=1|x2) for every x2 cell, NaN where P(x2) is zero."""
    marginal = j.table.sum(axis=(0, 2))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.asarray(j.table[1].sum(axis=1) / marginal, dtype=np.float64)


def posterior_table(j: DiscreteJoint) -> FloatArray:
    """P(y=0|x1, x2) indexed [x1, x2], NaN where P(x1, x2) is zero."""
    marginal = j.table.sum(axis=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.asarray(j.table[:, :, 0] / marginal, dtype=np.float64)


def bayes_accuracy(j: DiscreteJoint) -> float:
    """Accuracy of predicting the more probable class in every (x1, x2) cell."""
    return float(j.table.max(axis=2).sum())


def check_conditional_independence(j: DiscreteJoint) -> float:
    """Largest deviation of P(x1, x2|y) from P(x1|y) P(x2|y) over all cells."""
    p_y = j.table.sum(axis=(0, 1))
    if np.any(p_y == 0.0):
        raise ZeroMarginal("A class has zero probability")
    p_x1_x2_given_y = j.table / p_y
    p_x1_given_y = p_x1_x2_given_y.sum(axis=1)
    p_x2_given_y = p_x1_x2_given_y.sum(axis=0)
    product = p_x1_given_y[:, None, :] * p_x2_given_y[None, :, :]
    deviation = float(np.abs(p_x1_x2_given_y - product).max())
    _LOGGER.debug("Conditional independence deviation %.3g", deviation)
    return deviation


def _check_x2(j: DiscreteJoint, x2: int) -> int:
    if not 0 <= x2 < j.k:
        raise DomainError(f"x2={x2} outside 0..{j.k - 1}")
    return x2


def _check_simplex(values: FloatArray, name: str) -> None:
    if not np.all(np.isfinite(values)) or np.any(values < 0.0):
        raise InvalidSimplex(f"{name} has negative or non-finite entries")
    if abs(float(values.sum()) - 1.0) > _SUM_TOLERANCE:
        raise InvalidSimplex(f"{name} sums to {values.sum()}, not 1")
