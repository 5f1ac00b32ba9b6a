"""Experiment configuration.

A config is a single JSON document naming the experiment, a seed, and one
parameter block per module. Every parameter is optional; missing values are
filled from the defaults in const.py and unknown keys are rejected.
"""

from __future__ import annotations

import json
import logging
from typing import TYPE_CHECKING, Any, Optional

import voluptuous as vol

from .const import (
    CONF_CORE,
    CONF_DATAGEN,
    CONF_EVAL,
    CONF_EXPERIMENT,
    CONF_LINKAGE,
    CONF_PREDICTOR,
    CONF_SEED,
    DEFAULT_BASELINE_FRACTIONS,
    DEFAULT_CLAMP_EPSILON,
    DEFAULT_DECISION_THRESHOLD,
    DEFAULT_GAUSSIAN_MEAN,
    DEFAULT_GAUSSIAN_STD,
    DEFAULT_HISTOGRAM_BINS,
    DEFAULT_HOLDOUT_FRACTION,
    DEFAULT_L2_PENALTY,
    DEFAULT_LAPLACE_LOCATION,
    DEFAULT_LAPLACE_SCALE,
    DEFAULT_LEARNING_RATE,
    DEFAULT_MATCH_FRACTION,
    DEFAULT_MAX_EPOCHS,
    DEFAULT_MIN_MARGIN,
    DEFAULT_N_MASTER,
    DEFAULT_N_UPDATE,
    DEFAULT_NAME_POOL_SIZE,
    DEFAULT_SEED,
    DEFAULT_SWEEP_GRID,
    DEFAULT_TOLERANCE,
    DEFAULT_YEAR_RANGE,
    MAX_CLAMP_EPSILON,
    ExperimentName,
    Objective,
    PredictorKind,
    SurrogateField,
)
from .datagen import FieldNoise, LinkageCorpusSpec
from .errors import ConfigError
from .linkage import MatcherConfig
from .predictor import TrainConfig

if TYPE_CHECKING:
    import pathlib

_LOGGER = logging.getLogger(__name__)

_PROBABILITY = vol.All(vol.Coerce(float), vol.Range(min=0.0, max=1.0))
_POSITIVE_INT = vol.All(vol.Coerce(int), vol.Range(min=1))
_CARDINALITY = vol.All(vol.Coerce(int), vol.Range(min=2))
_POSITIVE_FLOAT = vol.All(
    vol.Coerce(float), vol.Range(min=0.0, min_included=False)
)
_FRACTION = vol.All(
    vol.Coerce(float), vol.Range(min=0.0, min_included=False, max=1.0)
)


def _pair(item: Any) -> Any:  # noqa: ANN401
    return vol.All(vol.ExactSequence([item, item]), list)


_FIELD_NOISE_DEFAULTS = FieldNoise()

CORE_SCHEMA = vol.Schema(
    {
        vol.Optional("clamp_epsilon", default=DEFAULT_CLAMP_EPSILON): vol.All(
            vol.Coerce(float),
            vol.Range(min=0.0, min_included=False, max=MAX_CLAMP_EPSILON),
        ),
        vol.Optional("objective", default=Objective.F1.value): vol.In(
            [o.value for o in Objective]
        ),
    }
)

PREDICTOR_SCHEMA = vol.Schema(
    {
        vol.Optional("kind", default=PredictorKind.HISTOGRAM.value): vol.In(
            [k.value for k in PredictorKind]
        ),
        vol.Optional("learning_rate", default=DEFAULT_LEARNING_RATE): _POSITIVE_FLOAT,
        vol.Optional("l2_penalty", default=DEFAULT_L2_PENALTY): vol.All(
            vol.Coerce(float), vol.Range(min=0.0)
        ),
        vol.Optional("max_epochs", default=DEFAULT_MAX_EPOCHS): _POSITIVE_INT,
        vol.Optional("tolerance", default=DEFAULT_TOLERANCE): _POSITIVE_FLOAT,
        vol.Optional("bins", default=DEFAULT_HISTOGRAM_BINS): vol.All(
            vol.Coerce(int), vol.Range(min=2)
        ),
    }
)

FIELD_NOISE_SCHEMA = vol.Schema(
    {
        vol.Optional(name, default=value): _PROBABILITY
        for name, value in vars(_FIELD_NOISE_DEFAULTS).items()
    }
)

DATAGEN_SCHEMA = vol.Schema(
    {
        # Examples 1 and 2
        vol.Optional("n_samples", default=1_000_000): _POSITIVE_INT,
        vol.Optional("labeled_size", default=10_000): _POSITIVE_INT,
        vol.Optional(
            "gaussian_params", default=[DEFAULT_GAUSSIAN_MEAN, DEFAULT_GAUSSIAN_STD]
        ): _pair(vol.Coerce(float)),
        vol.Optional(
            "laplace_params", default=[DEFAULT_LAPLACE_LOCATION, DEFAULT_LAPLACE_SCALE]
        ): _pair(vol.Coerce(float)),
        # Random joints
        vol.Optional("fuzz_trials", default=1000): _POSITIVE_INT,
        vol.Optional("fuzz_k_min", default=2): _CARDINALITY,
        vol.Optional("fuzz_k_max", default=16): _CARDINALITY,
        vol.Optional("min_margin", default=DEFAULT_MIN_MARGIN): vol.All(
            vol.Coerce(float), vol.Range(min=0.0, max=1.0, max_included=False)
        ),
        # Linkage corpus
        vol.Optional("n_master", default=DEFAULT_N_MASTER): _POSITIVE_INT,
        vol.Optional("n_update", default=DEFAULT_N_UPDATE): _POSITIVE_INT,
        vol.Optional("match_fraction", default=DEFAULT_MATCH_FRACTION): _PROBABILITY,
        vol.Optional("year_range", default=list(DEFAULT_YEAR_RANGE)): _pair(
            vol.Coerce(int)
        ),
        vol.Optional("name_pool_size", default=DEFAULT_NAME_POOL_SIZE): _POSITIVE_INT,
        vol.Optional("field_noise", default={}): FIELD_NOISE_SCHEMA,
    }
)

LINKAGE_SCHEMA = vol.Schema(
    {
        vol.Optional("surrogate_field", default=SurrogateField.GRAD_YEAR.value): vol.In(
            [f.value for f in SurrogateField]
        ),
        vol.Optional(
            "holdout_fraction", default=DEFAULT_HOLDOUT_FRACTION
        ): _PROBABILITY,
        vol.Optional("threshold", default=None): vol.Any(None, _PROBABILITY),
        vol.Optional(
            "fallback_threshold", default=DEFAULT_DECISION_THRESHOLD
        ): _PROBABILITY,
        vol.Optional(
            "baseline_fractions", default=list(DEFAULT_BASELINE_FRACTIONS)
        ): vol.All([_FRACTION], vol.Length(min=1)),
    }
)

EVAL_SCHEMA = vol.Schema(
    {
        vol.Optional("sweep_grid", default=DEFAULT_SWEEP_GRID): vol.All(
            vol.Coerce(int), vol.Range(min=2)
        ),
        vol.Optional("min_precision", default=0.9): _PROBABILITY,
        vol.Optional("min_recall", default=0.9): _PROBABILITY,
        # Allowed gap to the Bayes-optimal accuracy in the example experiments.
        vol.Optional("accuracy_tolerance", default=0.01): _PROBABILITY,
        vol.Optional("identity_tolerance", default=1e-10): _POSITIVE_FLOAT,
        vol.Optional("consistency_tolerance", default=1e-12): _POSITIVE_FLOAT,
        vol.Optional("monotone_pairs", default=100_000): _POSITIVE_INT,
    }
)

CONFIG_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_EXPERIMENT): vol.In([e.value for e in ExperimentName]),
        vol.Optional(CONF_SEED, default=DEFAULT_SEED): vol.Coerce(int),
        vol.Optional(CONF_CORE, default={}): CORE_SCHEMA,
        vol.Optional(CONF_PREDICTOR, default={}): PREDICTOR_SCHEMA,
        vol.Optional(CONF_DATAGEN, default={}): DATAGEN_SCHEMA,
        vol.Optional(CONF_LINKAGE, default={}): LINKAGE_SCHEMA,
        vol.Optional(CONF_EVAL, default={}): EVAL_SCHEMA,
    }
)


def validate_config(
    document: dict[str, Any], seed: Optional[int] = None
) -> dict[str, Any]:
    """Validate a config document and fill in every default.

    Args:
        document: the parsed JSON document.
        seed: optional override for the document's seed.
    """
    if seed is not None:
        document = {**document, CONF_SEED: seed}
    try:
        config: dict[str, Any] = CONFIG_SCHEMA(document)
    except vol.Invalid as err:
        raise ConfigError(f"Invalid configuration: {err}") from err
    return config


def load_config(path: pathlib.Path, seed: Optional[int] = None) -> dict[str, Any]:
    """Read, validate and default a JSON config file."""
    try:
        with path.open() as f:
            document = json.load(f)
    except FileNotFoundError as err:
        raise ConfigError(f"Config file {path} not found") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"Config file {path} is not valid JSON: {err}") from err
    if not isinstance(document, dict):
        raise ConfigError(f"Config file {path} must contain a JSON object")

    config = validate_config(document, seed)
    _LOGGER.debug("Loaded config %s: %s", path, config)
    return config


def train_config(config: dict[str, Any]) -> TrainConfig:
    """The predictor block as a TrainConfig."""
    predictor = config[CONF_PREDICTOR]
    return TrainConfig(
        learning_rate=predictor["learning_rate"],
        l2_penalty=predictor["l2_penalty"],
        max_epochs=predictor["max_epochs"],
        tolerance=predictor["tolerance"],
        seed=config[CONF_SEED],
    )


def matcher_config(config: dict[str, Any]) -> MatcherConfig:
    """The linkage and core blocks as a MatcherConfig."""
    linkage = config[CONF_LINKAGE]
    return MatcherConfig(
        train=train_config(config),
        surrogate_field=SurrogateField(linkage["surrogate_field"]),
        objective=Objective(config[CONF_CORE]["objective"]),
        holdout_fraction=linkage["holdout_fraction"],
        threshold=linkage["threshold"],
        fallback_threshold=linkage["fallback_threshold"],
        clamp_epsilon=config[CONF_CORE]["clamp_epsilon"],
        seed=config[CONF_SEED],
    )


def corpus_spec(config: dict[str, Any]) -> LinkageCorpusSpec:
    """The datagen block and seed as a corpus specification."""
    datagen = config[CONF_DATAGEN]
    low, high = datagen["year_range"]
    return LinkageCorpusSpec(
        n_master=datagen["n_master"],
        n_update=datagen["n_update"],
        match_fraction=datagen["match_fraction"],
        year_range=(low, high),
        name_pool_size=datagen["name_pool_size"],
        field_noise=FieldNoise(**datagen["field_noise"]),
        seed=config[CONF_SEED],
    )
