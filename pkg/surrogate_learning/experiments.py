"""The named experiments and the runner that produces their reports."""

from __future__ import annotations

import logging
from collections.abc import Callable
from typing import TYPE_CHECKING, Any, Optional

import numpy as np
import numpy.typing as npt

from .config import corpus_spec, load_config, matcher_config, train_config
from .const import (
    CONF_CORE,
    CONF_DATAGEN,
    CONF_EVAL,
    CONF_EXPERIMENT,
    CONF_LINKAGE,
    CONF_PREDICTOR,
    CONF_SEED,
    DEFAULT_DECISION_THRESHOLD,
    ExperimentName,
    Mode,
    PredictorKind,
)
from .core_math import (
    ClassConditionalX1,
    estimate_conditionals,
    posterior_general,
    score_missing_x1,
    score_special,
    split_target_background,
    surrogate_posterior_y1,
)
from .datagen import (
    Example1Spec,
    Example2Spec,
    ExampleSample,
    ExampleSpec,
    default_grid_range,
    discretize_example,
    gen_linkage_corpus,
    random_ci_joint,
    sample_example,
)
from .errors import ConfigError
from .linkage import MatchResult, run_matcher, run_supervised_baseline
from .metrics import EvalReport, PrecisionRecall, compute_pr, threshold_sweep
from .oracle import (
    DiscreteJoint,
    bayes_accuracy,
    check_conditional_independence,
    cond_x1_given_y,
    cond_y_given_x2,
    joint_from_ci_spec,
    posterior_table,
    x1_given_x2_table,
)
from .predictor import HistogramModel, fit_histogram_arrays, fit_logistic_matrix

if TYPE_CHECKING:
    import pathlib

    from .records import LinkageCorpus

_LOGGER = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

Experiment = Callable[[dict[str, Any]], EvalReport]

# Monotonicity pairs closer than this are not compared.
_MIN_PAIR_GAP = 1e-9


def run_experiment(
    config_path: pathlib.Path,
    out_dir: Optional[pathlib.Path] = None,
    seed: Optional[int] = None,
) -> EvalReport:
    """Load a config, run the experiment it names and write its report.

    The report is returned whether or not its checks passed; callers decide
    what a failed check means.
    """
    config = load_config(config_path, seed)
    report = run_config(config)
    if out_dir is not None:
        report.write(out_dir)
        _LOGGER.info("Wrote %s report to %s", report.experiment, out_dir)
    return report


def run_config(config: dict[str, Any]) -> EvalReport:
    """Run the experiment named by an already validated config."""
    name = ExperimentName(config[CONF_EXPERIMENT])
    _LOGGER.info("Running %s with seed %d", name.value, config[CONF_SEED])
    report = EXPERIMENTS[name](config)
    if report.passed:
        _LOGGER.info("%s passed", name.value)
    else:
        _LOGGER.error("%s failed: %s", name.value, ", ".join(report.failures))
    return report


def example1_posterior(config: dict[str, Any]) -> EvalReport:
    """Posterior reconstruction on Example 1 compared with the Bayes optimum."""
    return _run_example(
        config, Example1Spec(**_example_params(config)), Mode.GENERAL
    )


def example2_scoring(config: dict[str, Any]) -> EvalReport:
    """Hundred percent recall scoring on Example 2."""
    return _run_example(
        config, Example2Spec(**_example_params(config)), Mode.HUNDRED_PERCENT_RECALL
    )


def ci_oracle_fuzz(config: dict[str, Any]) -> EvalReport:
    """Check the surrogate identities against exact posteriors of random joints."""
    datagen = config[CONF_DATAGEN]
    tolerances = config[CONF_EVAL]
    epsilon = config[CONF_CORE]["clamp_epsilon"]
    k_min, k_max = datagen["fuzz_k_min"], datagen["fuzz_k_max"]
    if k_min > k_max:
        raise ConfigError(f"fuzz_k_min={k_min} exceeds fuzz_k_max={k_max}")

    rng = np.random.default_rng(config[CONF_SEED])
    trials = datagen["fuzz_trials"]
    ks = rng.integers(k_min, k_max + 1, size=trials).tolist()
    seeds = rng.integers(2**31, size=trials).tolist()

    general_error = 0.0
    special_error = 0.0
    missing_error = 0.0
    ci_deviation = 0.0
    for k, trial_seed in zip(ks, seeds, strict=True):
        spec = random_ci_joint(k, trial_seed, datagen["min_margin"])
        joint = joint_from_ci_spec(spec)
        general_error = max(general_error, _general_identity_error(joint, epsilon))
        ci_deviation = max(ci_deviation, check_conditional_independence(joint))

        recall_spec = random_ci_joint(
            k, trial_seed, datagen["min_margin"], hundred_percent_recall=True
        )
        special, missing = _recall_identity_errors(
            joint_from_ci_spec(recall_spec),
            ClassConditionalX1(*recall_spec.p_x1_given_y),
            epsilon,
        )
        special_error = max(special_error, special)
        missing_error = max(missing_error, missing)

    monotone_spec = random_ci_joint(
        k_max,
        int(rng.integers(2**31)),
        datagen["min_margin"],
        hundred_percent_recall=True,
    )
    violations, compared = _monotone_violations(
        ClassConditionalX1(*monotone_spec.p_x1_given_y),
        tolerances["monotone_pairs"],
        rng,
        epsilon,
    )

    report = EvalReport(
        experiment=ExperimentName.CI_ORACLE_FUZZ.value,
        precision=None,
        recall=None,
        f1=None,
        threshold=None,
        seed=config[CONF_SEED],
        config_echo=config,
        metrics={
            "trials": trials,
            "general_max_error": general_error,
            "special_max_error": special_error,
            "missing_x1_max_error": missing_error,
            "ci_max_deviation": ci_deviation,
            "monotone_pairs": compared,
            "monotone_violations": violations,
        },
    )
    report.check(
        "general posterior matches the oracle",
        ok=general_error <= tolerances["identity_tolerance"],
    )
    report.check(
        "special-case score matches the general posterior",
        ok=special_error <= tolerances["consistency_tolerance"],
    )
    report.check(
        "missing-x1 score matches the oracle P(y=1|x2)",
        ok=missing_error <= tolerances["consistency_tolerance"],
    )
    report.check("special-case score is strictly increasing", ok=violations == 0)
    return report


def linkage_synthetic(config: dict[str, Any]) -> EvalReport:
    """The surrogate matcher on a generated physician corpus."""
    corpus = gen_linkage_corpus(corpus_spec(config))
    result = run_matcher(corpus, matcher_config(config))
    pr = _evaluate(corpus, result)

    report = _linkage_report(config, ExperimentName.LINKAGE_SYNTHETIC, result, pr)
    report.metrics.update(_matcher_metrics(corpus, result))
    _check_precision_recall(report, config, pr)
    return report


def linkage_baseline_comparison(config: dict[str, Any]) -> EvalReport:
    """The surrogate matcher against supervised baselines trained on labels."""
    corpus = gen_linkage_corpus(corpus_spec(config))
    cfg = matcher_config(config)
    result = run_matcher(corpus, cfg)
    pr = _evaluate(corpus, result)

    baselines: list[dict[str, Any]] = []
    shared_recalls: dict[float, tuple[float, float]] = {}
    for fraction in config[CONF_LINKAGE]["baseline_fractions"]:
        baseline = run_supervised_baseline(corpus, fraction, cfg)
        shared = result.evaluation_ids & baseline.evaluation_ids
        shared_recalls[fraction] = (
            _evaluate(corpus, result, shared).recall,
            _evaluate(corpus, baseline, shared).recall,
        )
        baseline_pr = _evaluate(corpus, baseline)
        _LOGGER.info(
            "Baseline on %.0f%% of labels: precision %s recall %.4f",
            100 * fraction,
            baseline_pr.precision,
            baseline_pr.recall,
        )
        baselines.append(
            {
                "labeled_fraction": fraction,
                "precision": baseline_pr.precision,
                "recall": baseline_pr.recall,
                "f1": baseline_pr.f1,
                "threshold": baseline.threshold,
                "evaluated": len(baseline.evaluation_ids),
            }
        )

    report = _linkage_report(
        config, ExperimentName.LINKAGE_BASELINE_COMPARISON, result, pr
    )
    report.metrics.update(_matcher_metrics(corpus, result))
    report.metrics["baselines"] = baselines
    _check_precision_recall(report, config, pr)

    # Both recalls are measured on the updates neither method consumed.
    fewest_labels = min(shared_recalls)
    surrogate_recall, baseline_recall = shared_recalls[fewest_labels]
    report.check(
        f"surrogate recall is at least the baseline recall at "
        f"{fewest_labels} of labels",
        ok=surrogate_recall >= baseline_recall,
    )
    return report


EXPERIMENTS: dict[ExperimentName, Experiment] = {
    ExperimentName.EXAMPLE1_POSTERIOR: example1_posterior,
    ExperimentName.EXAMPLE2_SCORING: example2_scoring,
    ExperimentName.CI_ORACLE_FUZZ: ci_oracle_fuzz,
    ExperimentName.LINKAGE_SYNTHETIC: linkage_synthetic,
    ExperimentName.LINKAGE_BASELINE_COMPARISON: linkage_baseline_comparison,
}


def _example_params(config: dict[str, Any]) -> dict[str, Any]:
    datagen = config[CONF_DATAGEN]
    return {
        "gaussian_params": tuple(datagen["gaussian_params"]),
        "laplace_params": tuple(datagen["laplace_params"]),
    }


def _run_example(config: dict[str, Any], spec: ExampleSpec, mode: Mode) -> EvalReport:
    """Fit P(x1|x2) on unlabelled draws, count P(x1|y) on a labelled sample.

    The surrogate posterior thresholded at one half is compared with the Bayes
    optimal accuracy of the same example discretised on the histogram grid.
    """
    datagen = config[CONF_DATAGEN]
    seed = config[CONF_SEED]
    epsilon = config[CONF_CORE]["clamp_epsilon"]
    bins = config[CONF_PREDICTOR]["bins"]
    x2_range = default_grid_range(spec)

    sample = sample_example(spec, datagen["n_samples"], seed)
    labeled = sample_example(spec, datagen["labeled_size"], seed + 1)
    conditionals = estimate_conditionals(
        zip(labeled.x1.tolist(), labeled.y.tolist(), strict=True)
    )
    target, background = split_target_background(sample.x1)
    _LOGGER.debug(
        "%d target and %d background samples; counted %s",
        len(target),
        len(background),
        conditionals,
    )

    p_x1 = _fit_x1_predictor(config, sample, x2_range)
    posterior = surrogate_posterior_y1(
        p_x1,
        sample.x1.astype(np.float64),
        conditionals,
        mode=mode,
        clamp_epsilon=epsilon,
    )
    positive = sample.y == 1
    predicted = posterior >= DEFAULT_DECISION_THRESHOLD
    accuracy = float(np.mean(predicted == positive))

    joint = joint_from_ci_spec(discretize_example(spec, bins, x2_range))
    optimum = bayes_accuracy(joint)
    grid = HistogramModel(
        x2_range=x2_range,
        positives=np.zeros(bins, dtype=np.int64),
        totals=np.zeros(bins, dtype=np.int64),
    )
    exact = 1.0 - posterior_table(joint)[sample.x1, grid.bin_index(sample.x2)]

    tp = int(np.count_nonzero(predicted & positive))
    n_predicted = int(np.count_nonzero(predicted))
    n_positive = int(np.count_nonzero(positive))
    pr = PrecisionRecall(
        precision=tp / n_predicted if n_predicted else None,
        recall=tp / n_positive if n_positive else 0.0,
    )
    name = (
        ExperimentName.EXAMPLE1_POSTERIOR
        if mode == Mode.GENERAL
        else ExperimentName.EXAMPLE2_SCORING
    )
    report = EvalReport(
        experiment=name.value,
        precision=pr.precision,
        recall=pr.recall,
        f1=pr.f1,
        threshold=DEFAULT_DECISION_THRESHOLD,
        seed=seed,
        sweep=threshold_sweep(
            list(zip(posterior.tolist(), sample.y.tolist(), strict=True)),
            config[CONF_EVAL]["sweep_grid"],
        ),
        config_echo=config,
        metrics={
            "accuracy": accuracy,
            "bayes_accuracy": optimum,
            "accuracy_gap": optimum - accuracy,
            "posterior_mean_abs_error": float(np.nanmean(np.abs(posterior - exact))),
            "p_x1_given_y0": conditionals.p_x1_given_y0,
            "p_x1_given_y1": conditionals.p_x1_given_y1,
            "target_samples": len(target),
            "background_samples": len(background),
        },
    )
    report.check(
        "accuracy within tolerance of the Bayes optimum",
        ok=abs(optimum - accuracy) <= config[CONF_EVAL]["accuracy_tolerance"],
    )
    return report


def _fit_x1_predictor(
    config: dict[str, Any], sample: ExampleSample, x2_range: tuple[float, float]
) -> FloatArray:
    """P(x1=1|x2) for every draw, from the configured predictor."""
    if PredictorKind(config[CONF_PREDICTOR]["kind"]) == PredictorKind.HISTOGRAM:
        histogram = fit_histogram_arrays(
            sample.x2, sample.x1, config[CONF_PREDICTOR]["bins"], x2_range
        )
        return histogram.predict_proba_many(sample.x2)

    X = sample.x2[:, np.newaxis]
    model = fit_logistic_matrix(X, sample.x1.astype(np.float64), train_config(config))
    return model.predict_proba_matrix(X)


def _general_identity_error(joint: DiscreteJoint, epsilon: float) -> float:
    cond = cond_x1_given_y(joint)
    p_x1 = x1_given_x2_table(joint)
    exact = posterior_table(joint)
    errors = [
        posterior_general(p_x1, cond, x1, clamp_epsilon=epsilon, clamp=False)
        - exact[x1]
        for x1 in (0, 1)
    ]
    return max(float(np.max(np.abs(error))) for error in errors)


def _recall_identity_errors(
    joint: DiscreteJoint, cond: ClassConditionalX1, epsilon: float
) -> tuple[float, float]:
    """Errors of the special-case score and of the missing-x1 score."""
    p_x1 = x1_given_x2_table(joint)
    special = score_special(1.0 - p_x1, cond, clamp_epsilon=epsilon, clamp=False)
    general = posterior_general(p_x1, cond, 1, clamp_epsilon=epsilon, clamp=False)
    missing = score_missing_x1(p_x1, 1.0 - special)
    exact = np.array([cond_y_given_x2(joint, x2) for x2 in range(joint.k)])
    return (
        float(np.max(np.abs(special - general))),
        float(np.max(np.abs(missing - exact))),
    )


def _monotone_violations(
    cond: ClassConditionalX1,
    pairs: int,
    rng: np.random.Generator,
    epsilon: float,
) -> tuple[int, int]:
    """Count pairs whose special-case scores are not in the order of their inputs."""
    draws = rng.uniform(_MIN_PAIR_GAP, 1.0 - _MIN_PAIR_GAP, size=(pairs, 2))
    draws = draws[np.abs(draws[:, 0] - draws[:, 1]) > _MIN_PAIR_GAP]
    low, high = draws.min(axis=1), draws.max(axis=1)
    low_score = score_special(low, cond, clamp_epsilon=epsilon, clamp=False)
    high_score = score_special(high, cond, clamp_epsilon=epsilon, clamp=False)
    return int(np.count_nonzero(high_score <= low_score)), len(draws)


def _evaluate(
    corpus: LinkageCorpus,
    result: MatchResult,
    evaluation_ids: Optional[frozenset[str]] = None,
) -> PrecisionRecall:
    """Precision and recall on the updates whose labels were not consumed."""
    ids = result.evaluation_ids if evaluation_ids is None else evaluation_ids
    return compute_pr(
        [d for d in result.decisions if d.update_id in ids], corpus.truth
    )


def _linkage_report(
    config: dict[str, Any],
    name: ExperimentName,
    result: MatchResult,
    pr: PrecisionRecall,
) -> EvalReport:
    return EvalReport(
        experiment=name.value,
        precision=pr.precision,
        recall=pr.recall,
        f1=pr.f1,
        threshold=result.threshold,
        seed=config[CONF_SEED],
        sweep=threshold_sweep(result.scored, config[CONF_EVAL]["sweep_grid"]),
        config_echo=config,
    )


def _matcher_metrics(corpus: LinkageCorpus, result: MatchResult) -> dict[str, Any]:
    evaluated = [d for d in result.decisions if d.update_id in result.evaluation_ids]
    return {
        "master_records": len(corpus.master),
        "update_records": len(corpus.update),
        "matchable_updates": corpus.matchable_count,
        "evaluated_updates": len(evaluated),
        "emitted_matches": sum(1 for d in evaluated if d.master_id is not None),
        "p_x1_given_y0": (
            result.conditionals.p_x1_given_y0 if result.conditionals else None
        ),
        "predictor_epochs": result.model.epochs,
    }


def _check_precision_recall(
    report: EvalReport, config: dict[str, Any], pr: PrecisionRecall
) -> None:
    thresholds = config[CONF_EVAL]
    report.check(
        f"precision at least {thresholds['min_precision']}",
        ok=pr.precision is not None and pr.precision >= thresholds["min_precision"],
    )
    report.check(
        f"recall at least {thresholds['min_recall']}",
        ok=pr.recall >= thresholds["min_recall"],
    )
