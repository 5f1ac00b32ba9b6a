"""Seeded synthetic data.

Provides samplers for the two worked examples (a Gaussian y=0 and a Laplace
y=1 conditional for x2, with a fixed joint table for (x1, y)), random
conditionally independent joints for property checks, and a two-database
physician corpus for record linkage.

Every generator takes a seed and is deterministic given it.
"""

from __future__ import annotations

import csv
import logging
import string
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

import numpy as np
import numpy.typing as npt
from scipy import stats

from .const import (
    DEFAULT_GAUSSIAN_MEAN,
    DEFAULT_GAUSSIAN_STD,
    DEFAULT_HISTOGRAM_BINS,
    DEFAULT_LAPLACE_LOCATION,
    DEFAULT_LAPLACE_SCALE,
    DEFAULT_MATCH_FRACTION,
    DEFAULT_MIN_MARGIN,
    DEFAULT_N_MASTER,
    DEFAULT_N_UPDATE,
    DEFAULT_NAME_POOL_SIZE,
    DEFAULT_SEED,
    DEFAULT_YEAR_RANGE,
    EXAMPLE1_JOINT_X1_Y,
    EXAMPLE2_JOINT_X1_Y,
    GRID_HALF_WIDTH_SIGMAS,
)
from .core_math import ClassConditionalX1
from .errors import InvalidSpec, MalformedInput
from .oracle import CIJointSpec, DiscreteJoint
from .records import LinkageCorpus, LinkageRecord

if TYPE_CHECKING:
    import pathlib

_LOGGER = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int_]

_SUM_TOLERANCE = 1e-12

# Random joints draw (P(x1|y=0), P(x1|y=1)) pairs in batches until one has the
# requested margin.
_MARGIN_BATCH = 1024
_MAX_MARGIN_BATCHES = 256

_FIRST_NAME_POOL_SIZE = 400
_STREET_NAME_POOL_SIZE = 300

# Surname frequencies fall off as 1 / (rank + offset).
_SURNAME_RANK_OFFSET = 50

_SYLLABLES = (
    "al", "an", "ar", "be", "bri", "ca", "cha", "co", "da", "de", "di", "el",
    "en", "er", "fa", "fer", "ga", "gar", "ha", "hen", "is", "ja", "jo", "ka",
    "kel", "la", "le", "li", "lo", "ma", "mar", "me", "mi", "mo", "na", "ne",
    "ni", "no", "or", "pa", "pe", "ra", "re", "ri", "ro", "sa", "se", "sh",
    "son", "ta", "te", "ti", "to", "va", "ve", "wa", "we", "win", "ya", "zo",
)  # fmt: skip
_STREET_SUFFIXES = ("St", "Ave", "Rd", "Blvd", "Ln", "Dr", "Ct", "Way", "Pl")
_SPECIALTIES = (
    "Anesthesiology",
    "Cardiology",
    "Dermatology",
    "Emergency Medicine",
    "Endocrinology",
    "Family Medicine",
    "Gastroenterology",
    "General Surgery",
    "Geriatrics",
    "Hematology",
    "Internal Medicine",
    "Nephrology",
    "Neurology",
    "Obstetrics",
    "Oncology",
    "Ophthalmology",
    "Orthopedics",
    "Pathology",
    "Pediatrics",
    "Psychiatry",
    "Pulmonology",
    "Radiology",
    "Rheumatology",
    "Urology",
)


@dataclass(frozen=True)
class ExampleSpec:
    """A worked example: P(x1, y) table plus the class conditionals of x2.

    The table is ordered (x1=0,y=0), (x1=0,y=1), (x1=1,y=0), (x1=1,y=1).
    """

    joint_x1_y: tuple[float, float, float, float] = EXAMPLE1_JOINT_X1_Y
    # (mean, std) of the Gaussian P(x2|y=0)
    gaussian_params: tuple[float, float] = (
        DEFAULT_GAUSSIAN_MEAN,
        DEFAULT_GAUSSIAN_STD,
    )
    # (location, scale) of the Laplace P(x2|y=1)
    laplace_params: tuple[float, float] = (
        DEFAULT_LAPLACE_LOCATION,
        DEFAULT_LAPLACE_SCALE,
    )

    def __post_init__(self) -> None:
        joint = np.asarray(self.joint_x1_y, dtype=np.float64)
        if joint.shape != (4,) or np.any(joint < 0.0):
            raise InvalidSpec(f"Invalid joint table {self.joint_x1_y}")
        if abs(float(joint.sum()) - 1.0) > _SUM_TOLERANCE:
            raise InvalidSpec(f"Joint table sums to {joint.sum()}, not 1")
        if self.gaussian_params[1] <= 0.0 or self.laplace_params[1] <= 0.0:
            raise InvalidSpec("Gaussian std and Laplace scale must be positive")
        if self.p_y0 in (0.0, 1.0):
            raise InvalidSpec("Both classes need positive probability")

    @property
    def p_y0(self) -> float:
        return self.joint_x1_y[0] + self.joint_x1_y[2]

    @property
    def conditionals(self) -> ClassConditionalX1:
        """P(x1=1|y) obtained by normalising the joint table."""
        _, p01, p10, p11 = self.joint_x1_y
        return ClassConditionalX1(
            p_x1_given_y0=p10 / self.p_y0,
            p_x1_given_y1=p11 / (p01 + p11),
        )

    @property
    def hundred_percent_recall(self) -> bool:
        """Whether no positive sample has x1=0."""
        return self.joint_x1_y[1] == 0.0


@dataclass(frozen=True)
class Example1Spec(ExampleSpec):
    """Example 1: x1 is informative but positives can have x1=0."""


@dataclass(frozen=True)
class Example2Spec(ExampleSpec):
    """Example 2: the same densities with x1 a hundred percent recall feature."""

    joint_x1_y: tuple[float, float, float, float] = EXAMPLE2_JOINT_X1_Y

    def __post_init__(self) -> None:
        super().__post_init__()
        if not self.hundred_percent_recall:
            raise InvalidSpec("Example 2 requires P(x1=0, y=1) = 0")


@dataclass(frozen=True, eq=False)
class ExampleSample:
    """Parallel arrays of i.i.d. draws (x1, x2, y)."""

    x1: IntArray
    x2: FloatArray
    y: IntArray

    def __len__(self) -> int:
        return len(self.x1)

    def rows(self) -> list[tuple[int, float, int]]:
        return [
            (int(a), float(b), int(c))
            for a, b, c in zip(self.x1, self.x2, self.y, strict=True)
        ]

    def write_csv(self, path: pathlib.Path) -> None:
        with path.open("w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(("x1", "x2", "y"))
            writer.writerows((a, repr(b), c) for a, b, c in self.rows())

    @classmethod
    def read_csv(cls, path: pathlib.Path) -> ExampleSample:
        with path.open(newline="") as f:
            rows = list(csv.DictReader(f))
        try:
            return cls(
                x1=np.asarray([int(r["x1"]) for r in rows], dtype=np.int_),
                x2=np.asarray([float(r["x2"]) for r in rows], dtype=np.float64),
                y=np.asarray([int(r["y"]) for r in rows], dtype=np.int_),
            )
        except (KeyError, TypeError, ValueError) as err:
            raise MalformedInput(f"{path}: {err}") from err


@dataclass(frozen=True)
class FieldNoise:
    """Per-field corruption probabilities applied to true-match update records."""

    first_typo: float = 0.2
    middle_initial_change: float = 0.1
    street_typo: float = 0.2
    # The physician moved: street replaced wholesale.
    address_change: float = 0.25
    phone_change: float = 0.25
    specialty_change: float = 0.1
    # Probability that any optional field is blank, on every record.
    missing: float = 0.05
    grad_year_missing: float = 0.05

    def __post_init__(self) -> None:
        for name, value in vars(self).items():
            if not 0.0 <= value <= 1.0:
                raise InvalidSpec(f"field_noise.{name}={value} is not a probability")

    @classmethod
    def none(cls) -> FieldNoise:
        """No corruption at all: true matches are exact copies."""
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class LinkageCorpusSpec:
    """Parameters of the synthetic master/update physician databases."""

    n_master: int = DEFAULT_N_MASTER
    n_update: int = DEFAULT_N_UPDATE
    match_fraction: float = DEFAULT_MATCH_FRACTION
    year_range: tuple[int, int] = DEFAULT_YEAR_RANGE
    name_pool_size: int = DEFAULT_NAME_POOL_SIZE
    field_noise: FieldNoise = field(default_factory=FieldNoise)
    seed: int = DEFAULT_SEED

    def __post_init__(self) -> None:
        if self.n_master < 1 or self.n_update < 1 or self.name_pool_size < 1:
            raise InvalidSpec("Record counts and name pool size must be positive")
        if not 0.0 <= self.match_fraction <= 1.0:
            raise InvalidSpec(f"match_fraction={self.match_fraction} not in [0, 1]")
        if self.year_range[0] > self.year_range[1]:
            raise InvalidSpec(f"Empty year range {self.year_range}")
        if self.n_matches > self.n_master:
            raise InvalidSpec("More true matches requested than master records")

    @property
    def n_matches(self) -> int:
        return round(self.n_update * self.match_fraction)


def sample_example(spec: ExampleSpec, n: int, seed: int) -> ExampleSample:
    """Draw (x1, y) from the joint table, then x2 from the y-conditional density."""
    if n < 1:
        raise InvalidSpec(f"Need at least one sample, got {n}")
    rng = np.random.default_rng(seed)
    cells = rng.choice(4, size=n, p=np.asarray(spec.joint_x1_y))
    x1 = (cells // 2).astype(np.int_)
    y = (cells % 2).astype(np.int_)

    x2 = np.empty(n, dtype=np.float64)
    negatives = y == 0
    mean, std = spec.gaussian_params
    location, scale = spec.laplace_params
    x2[negatives] = rng.normal(mean, std, size=int(negatives.sum()))
    x2[~negatives] = rng.laplace(location, scale, size=int((~negatives).sum()))
    return ExampleSample(x1=x1, x2=x2, y=y)


def default_grid_range(spec: ExampleSpec) -> tuple[float, float]:
    """The discretisation range [-6 sigma, 6 sigma] with sigma the Gaussian std."""
    half_width = GRID_HALF_WIDTH_SIGMAS * spec.gaussian_params[1]
    return (-half_width, half_width)


def discretize_example(
    spec: ExampleSpec,
    bins: int = DEFAULT_HISTOGRAM_BINS,
    x2_range: Optional[tuple[float, float]] = None,
) -> CIJointSpec:
    """Integrate the example densities over equal-width bins.

    The two edge bins absorb the tails beyond the range, which matches the
    histogram estimator mapping out-of-range values to its edge bins.
    """
    if bins < 2:  # noqa: PLR2004
        raise InvalidSpec(f"Need at least 2 bins, got {bins}")
    low, high = x2_range or default_grid_range(spec)
    edges = np.linspace(low, high, bins + 1)
    edges[0], edges[-1] = -np.inf, np.inf

    mean, std = spec.gaussian_params
    location, scale = spec.laplace_params
    p_x2_given_y0 = np.diff(stats.norm.cdf(edges, loc=mean, scale=std))
    p_x2_given_y1 = np.diff(stats.laplace.cdf(edges, loc=location, scale=scale))

    cond = spec.conditionals
    return CIJointSpec(
        p_y0=spec.p_y0,
        p_x1_given_y=(cond.p_x1_given_y0, cond.p_x1_given_y1),
        p_x2_given_y=(
            p_x2_given_y0 / p_x2_given_y0.sum(),
            p_x2_given_y1 / p_x2_given_y1.sum(),
        ),
    )


def sample_joint(
    j: DiscreteJoint, n: int, seed: int
) -> tuple[IntArray, IntArray, IntArray]:
    """Draw n cells (x1, x2 index, y) from a discrete joint."""
    if n < 1:
        raise InvalidSpec(f"Need at least one sample, got {n}")
    rng = np.random.default_rng(seed)
    flat = j.table.ravel()
    cells = rng.choice(len(flat), size=n, p=flat / flat.sum())
    x1, x2, y = np.unravel_index(cells, j.table.shape)
    return x1.astype(np.int_), x2.astype(np.int_), y.astype(np.int_)


def random_ci_joint(
    k: int,
    seed: int,
    min_margin: float = DEFAULT_MIN_MARGIN,
    *,
    hundred_percent_recall: bool = False,
) -> CIJointSpec:
    """A random conditionally independent joint.

    The surrogate conditionals satisfy |P(x1|y=0) - P(x1|y=1)| >= min_margin.

    All components are drawn uniformly from their simplices. With
    hundred_percent_recall, P(x1=1|y=1) is exactly one.
    """
    if k < 2:  # noqa: PLR2004
        raise InvalidSpec(f"Need K >= 2, got {k}")
    if not 0.0 <= min_margin < 1.0:
        raise InvalidSpec(f"min_margin={min_margin} not in [0, 1)")

    rng = np.random.default_rng(seed)
    p_y0 = float(rng.uniform())
    p_x2_given_y = (rng.dirichlet(np.ones(k)), rng.dirichlet(np.ones(k)))

    if hundred_percent_recall:
        p_x1_given_y = (float(rng.uniform(0.0, 1.0 - min_margin)), 1.0)
    else:
        p_x1_given_y = _draw_with_margin(rng, min_margin)

    return CIJointSpec(p_y0=p_y0, p_x1_given_y=p_x1_given_y, p_x2_given_y=p_x2_given_y)


def _draw_with_margin(
    rng: np.random.Generator, min_margin: float
) -> tuple[float, float]:
    for _ in range(_MAX_MARGIN_BATCHES):
        pairs = rng.uniform(size=(_MARGIN_BATCH, 2))
        accepted = np.flatnonzero(np.abs(pairs[:, 0] - pairs[:, 1]) >= min_margin)
        if accepted.size:
            first = pairs[accepted[0]]
            return float(first[0]), float(first[1])
    raise InvalidSpec(f"Could not draw P(x1|y) with margin {min_margin}")


def gen_linkage_corpus(spec: LinkageCorpusSpec) -> LinkageCorpus:
    """Generate master and update databases with the ground-truth mapping.

    A match_fraction of the update records are corrupted copies of distinct
    master records; the rest are fresh physicians and are unmatchable. The
    last name and graduation year of a true match are never altered, so
    blocking on last name always retrieves the true match and the year
    equality is a hundred percent recall feature.
    """
    rng = np.random.default_rng(spec.seed)
    generator = _CorpusGenerator(spec, rng)

    master = [generator.fresh_record(f"M{i:06d}") for i in range(spec.n_master)]

    update_ids = [f"U{i:05d}" for i in range(spec.n_update)]
    matched_slots = rng.permutation(spec.n_update)[: spec.n_matches]
    matched_masters = rng.choice(spec.n_master, size=spec.n_matches, replace=False)
    source = dict(zip(matched_slots.tolist(), matched_masters.tolist(), strict=True))

    update: list[LinkageRecord] = []
    truth: dict[str, Optional[str]] = {}
    for slot, update_id in enumerate(update_ids):
        master_index = source.get(slot)
        if master_index is None:
            update.append(generator.fresh_record(update_id))
            truth[update_id] = None
        else:
            original = master[master_index]
            update.append(generator.corrupted_copy(update_id, original))
            truth[update_id] = original.id

    _LOGGER.debug(
        "Generated %d master and %d update records (%d true matches)",
        len(master),
        len(update),
        spec.n_matches,
    )
    return LinkageCorpus(master=master, update=update, truth=truth)


class _CorpusGenerator:
    """Draws record fields from a single random stream."""

    def __init__(self, spec: LinkageCorpusSpec, rng: np.random.Generator) -> None:
        self._noise = spec.field_noise
        self._rng = rng

        self._last_names = _name_pool(rng, spec.name_pool_size, min_syllables=2)
        ranks = np.arange(len(self._last_names))
        weights = 1.0 / (ranks + _SURNAME_RANK_OFFSET)
        self._last_weights = weights / weights.sum()

        self._first_names = _name_pool(rng, _FIRST_NAME_POOL_SIZE, min_syllables=1)
        self._street_names = _name_pool(rng, _STREET_NAME_POOL_SIZE, min_syllables=2)

        self._years = np.arange(spec.year_range[0], spec.year_range[1] + 1)
        self._year_weights = _year_weights(rng, self._years)

    def fresh_record(self, record_id: str) -> LinkageRecord:
        rng = self._rng
        last = self._last_names[rng.choice(len(self._last_names), p=self._last_weights)]
        return LinkageRecord(
            id=record_id,
            last=last,
            first=self._maybe_missing(self._pick(self._first_names)),
            middle_initial=self._maybe_missing(self._pick(string.ascii_uppercase)),
            street=self._maybe_missing(self._street()),
            phone=self._maybe_missing(self._phone()),
            specialty=self._maybe_missing(self._pick(_SPECIALTIES)),
            grad_year=self._maybe_missing_year(
                int(rng.choice(self._years, p=self._year_weights))
            ),
        )

    def corrupted_copy(self, record_id: str, original: LinkageRecord) -> LinkageRecord:
        noise = self._noise
        first = original.first
        if first is not None and self._happens(noise.first_typo):
            first = _typo(self._rng, first)

        middle_initial = original.middle_initial
        if self._happens(noise.middle_initial_change):
            middle_initial = self._pick(string.ascii_uppercase)

        street = original.street
        if self._happens(noise.address_change):
            street = self._street()
        elif street is not None and self._happens(noise.street_typo):
            street = _typo(self._rng, street)

        phone = original.phone
        if self._happens(noise.phone_change):
            phone = self._phone()

        specialty = original.specialty
        if self._happens(noise.specialty_change):
            specialty = self._pick(_SPECIALTIES)

        return LinkageRecord(
            id=record_id,
            last=original.last,
            first=self._maybe_missing(first),
            middle_initial=self._maybe_missing(middle_initial),
            street=self._maybe_missing(street),
            phone=self._maybe_missing(phone),
            specialty=self._maybe_missing(specialty),
            # The graduation year may go missing but never changes.
            grad_year=self._maybe_missing_year(original.grad_year),
        )

    def _happens(self, probability: float) -> bool:
        return bool(self._rng.random() < probability)

    def _pick(self, options: tuple[str, ...] | list[str] | str) -> str:
        return options[int(self._rng.integers(len(options)))]

    def _maybe_missing(self, value: Optional[str]) -> Optional[str]:
        return None if self._happens(self._noise.missing) else value

    def _maybe_missing_year(self, value: Optional[int]) -> Optional[int]:
        return None if self._happens(self._noise.grad_year_missing) else value

    def _street(self) -> str:
        number = int(self._rng.integers(1, 10_000))
        name = self._pick(self._street_names)
        return f"{number} {name} {self._pick(_STREET_SUFFIXES)}"

    def _phone(self) -> str:
        digits = self._rng.integers(0, 10, size=7)
        area = int(self._rng.integers(200, 1000))
        return f"{area}-{''.join(map(str, digits[:3]))}-{''.join(map(str, digits[3:]))}"


def _name_pool(rng: np.random.Generator, size: int, min_syllables: int) -> list[str]:
    names: list[str] = []
    seen: set[str] = set()
    while len(names) < size:
        count = int(rng.integers(min_syllables, min_syllables + 3))
        syllables = rng.choice(len(_SYLLABLES), size=count)
        name = "".join(_SYLLABLES[s] for s in syllables).capitalize()
        if name not in seen:
            seen.add(name)
            names.append(name)
    return names


def _year_weights(rng: np.random.Generator, years: IntArray) -> FloatArray:
    # A broad bump towards recent cohorts with some jitter per year.
    position = (years - years[0]) / max(len(years) - 1, 1)
    jitter = rng.uniform(0.6, 1.4, len(years))
    weights = np.exp(-(((position - 0.7) / 0.4) ** 2)) * jitter
    return np.asarray(weights / weights.sum(), dtype=np.float64)


def _typo(rng: np.random.Generator, text: str) -> str:
    """Apply one random character edit: insert, delete, substitute or transpose."""
    letters = string.ascii_lowercase
    position = int(rng.integers(len(text) + 1))
    operation = int(rng.integers(4))
    letter = letters[int(rng.integers(len(letters)))]
    if operation == 0 or not text:
        return text[:position] + letter + text[position:]
    position = min(position, len(text) - 1)
    if operation == 1 and len(text) > 1:
        return text[:position] + text[position + 1 :]
    if operation == 2 and position + 1 < len(text):  # noqa: PLR2004
        return (
            text[:position] + text[position + 1] + text[position] + text[position + 2 :]
        )
    # Substitution, making sure the character actually changes.
    replacement = letter if letter != text[position] else letters[
        (letters.index(letter) + 1) % len(letters)
    ]
    return text[:position] + replacement + text[position + 1 :]
