"""Command line interface.

Global flags come before the subcommand:

    python -m surrogate_learning --seed 3 --out-dir out link
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import pathlib
from collections.abc import Callable, Sequence
from typing import Any, Optional

import numpy as np
import numpy.typing as npt

from .config import (
    corpus_spec,
    load_config,
    matcher_config,
    train_config,
    validate_config,
)
from .const import (
    CONF_DATAGEN,
    CONF_EXPERIMENT,
    CONF_PREDICTOR,
    CONF_SEED,
    EXIT_ACCEPTANCE_FAILURE,
    EXIT_CONFIG_ERROR,
    EXIT_IO_ERROR,
    EXIT_OK,
    ExperimentName,
    Mode,
    PredictorKind,
)
from .core_math import ClassConditionalX1, estimate_conditionals, surrogate_posterior_y1
from .datagen import (
    Example1Spec,
    Example2Spec,
    ExampleSample,
    default_grid_range,
    gen_linkage_corpus,
    random_ci_joint,
    sample_example,
)
from .errors import ConfigError, MalformedInput, SurrogateLearningError
from .experiments import run_config
from .linkage import run_matcher, run_supervised_baseline, write_decisions_csv
from .metrics import compute_pr
from .oracle import joint_from_ci_spec
from .predictor import (
    HistogramModel,
    LogisticModel,
    fit_histogram_arrays,
    fit_logistic_matrix,
)
from .records import LinkageCorpus

_LOGGER = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
Handler = Callable[[argparse.Namespace], int]

_LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

SAMPLE_FILE = "sample.csv"
JOINT_FILE = "joint.json"
MODEL_FILE = "model.json"
SCORES_FILE = "scores.csv"
DECISIONS_FILE = "decisions.csv"


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the command line and return its exit code."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=_log_level(args.verbose), format=_LOG_FORMAT)

    handler: Handler = args.handler
    try:
        return handler(args)
    except ConfigError as err:
        _LOGGER.error("%s", err)  # noqa: TRY400
        return EXIT_CONFIG_ERROR
    except MalformedInput as err:
        _LOGGER.error("%s", err)  # noqa: TRY400
        return EXIT_IO_ERROR
    except SurrogateLearningError as err:
        _LOGGER.error("%s: %s", type(err).__name__, err)  # noqa: TRY400
        return EXIT_ACCEPTANCE_FAILURE
    except OSError as err:
        _LOGGER.error("%s", err)  # noqa: TRY400
        return EXIT_IO_ERROR


def build_parser() -> argparse.ArgumentParser:
    """The argument parser with one subparser per command."""
    parser = argparse.ArgumentParser(
        "surrogate_learning",
        description="Semi-supervised classification by surrogate learning.",
    )
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--config", type=pathlib.Path, help="JSON config document")
    parser.add_argument(
        "--out-dir", type=pathlib.Path, default=pathlib.Path("out"), help="outputs"
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen", help="generate synthetic data")
    gen.add_argument(
        "kind",
        nargs="?",
        choices=("corpus", "example1", "example2", "joint"),
        default="corpus",
    )
    gen.add_argument("-n", "--samples", type=int, help="example sample size")
    gen.add_argument("-k", type=int, default=8, help="x2 cardinality of a joint")
    gen.set_defaults(handler=_gen)

    fit = commands.add_parser("fit", help="fit P(x1=1|x2) on a sample")
    fit.add_argument("--sample", type=pathlib.Path, required=True)
    fit.set_defaults(handler=_fit)

    score = commands.add_parser("score", help="score a sample with a fitted model")
    score.add_argument("--sample", type=pathlib.Path, required=True)
    score.add_argument("--model", type=pathlib.Path, required=True)
    score.add_argument(
        "--mode", choices=[m.value for m in Mode], default=Mode.GENERAL.value
    )
    conditionals = score.add_mutually_exclusive_group(required=True)
    conditionals.add_argument(
        "--labeled", type=pathlib.Path, help="labelled sample to count P(x1|y) from"
    )
    conditionals.add_argument(
        "--conditionals",
        type=float,
        nargs=2,
        metavar=("P_X1_Y0", "P_X1_Y1"),
        help="P(x1=1|y=0) and P(x1=1|y=1)",
    )
    score.set_defaults(handler=_score)

    link = commands.add_parser("link", help="run the record linkage pipeline")
    link.add_argument("--corpus", type=pathlib.Path, help="corpus directory")
    link.add_argument(
        "--baseline",
        type=float,
        metavar="FRACTION",
        help="run the supervised baseline on this fraction of labels instead",
    )
    link.set_defaults(handler=_link)

    evaluate = commands.add_parser("eval", help="run the experiment in --config")
    evaluate.set_defaults(handler=_eval)

    fuzz = commands.add_parser("fuzz", help="check identities on random joints")
    fuzz.add_argument("--trials", type=int)
    fuzz.set_defaults(handler=_fuzz)

    demo = commands.add_parser("demo", help="run both worked examples end to end")
    demo.add_argument("-n", "--samples", type=int)
    demo.set_defaults(handler=_demo)

    return parser


def _gen(args: argparse.Namespace) -> int:
    config = _resolve_config(args, ExperimentName.LINKAGE_SYNTHETIC)
    out_dir: pathlib.Path = args.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = config[CONF_SEED]

    match args.kind:
        case "corpus":
            corpus = gen_linkage_corpus(corpus_spec(config))
            corpus.write_csv(out_dir)
            _LOGGER.info(
                "Wrote %d master and %d update records to %s",
                len(corpus.master),
                len(corpus.update),
                out_dir,
            )
        case "example1" | "example2":
            spec_type = Example1Spec if args.kind == "example1" else Example2Spec
            n = args.samples or config[CONF_DATAGEN]["n_samples"]
            sample_example(spec_type(), n, seed).write_csv(out_dir / SAMPLE_FILE)
            _LOGGER.info("Wrote %d %s draws to %s", n, args.kind, out_dir)
        case "joint":
            joint = joint_from_ci_spec(
                random_ci_joint(args.k, seed, config[CONF_DATAGEN]["min_margin"])
            )
            (out_dir / JOINT_FILE).write_text(joint.to_json())
    return EXIT_OK


def _fit(args: argparse.Namespace) -> int:
    config = _resolve_config(args, ExperimentName.EXAMPLE1_POSTERIOR)
    sample = ExampleSample.read_csv(args.sample)
    model: HistogramModel | LogisticModel
    if PredictorKind(config[CONF_PREDICTOR]["kind"]) == PredictorKind.HISTOGRAM:
        model = fit_histogram_arrays(
            sample.x2,
            sample.x1,
            config[CONF_PREDICTOR]["bins"],
            default_grid_range(Example1Spec()),
        )
    else:
        model = fit_logistic_matrix(
            sample.x2[:, np.newaxis], sample.x1.astype(np.float64), train_config(config)
        )
    args.out_dir.mkdir(parents=True, exist_ok=True)
    (args.out_dir / MODEL_FILE).write_text(model.to_json())
    _LOGGER.info("Fitted %s model on %d draws", type(model).__name__, len(sample))
    return EXIT_OK


def _score(args: argparse.Namespace) -> int:
    sample = ExampleSample.read_csv(args.sample)
    p_x1 = _load_model(args.model)(sample.x2)

    if args.labeled is not None:
        labeled = ExampleSample.read_csv(args.labeled)
        cond = estimate_conditionals(
            zip(labeled.x1.tolist(), labeled.y.tolist(), strict=True)
        )
    else:
        cond = ClassConditionalX1(*args.conditionals)

    scores = surrogate_posterior_y1(
        p_x1, sample.x1.astype(np.float64), cond, mode=Mode(args.mode)
    )
    args.out_dir.mkdir(parents=True, exist_ok=True)
    with (args.out_dir / SCORES_FILE).open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(("x1", "x2", "y", "score"))
        for (x1, x2, y), value in zip(sample.rows(), scores.tolist(), strict=True):
            writer.writerow((x1, repr(x2), y, repr(value)))
    return EXIT_OK


def _link(args: argparse.Namespace) -> int:
    config = _resolve_config(args, ExperimentName.LINKAGE_SYNTHETIC)
    if args.corpus is not None:
        corpus = LinkageCorpus.read_csv(args.corpus)
    else:
        corpus = gen_linkage_corpus(corpus_spec(config))

    cfg = matcher_config(config)
    if args.baseline is not None:
        result = run_supervised_baseline(corpus, args.baseline, cfg)
    else:
        result = run_matcher(corpus, cfg)

    args.out_dir.mkdir(parents=True, exist_ok=True)
    write_decisions_csv(args.out_dir / DECISIONS_FILE, result.decisions)

    if corpus.matchable_count:
        pr = compute_pr(
            [d for d in result.decisions if d.update_id in result.evaluation_ids],
            corpus.truth,
        )
        print(  # noqa: T201
            f"threshold {result.threshold:.6f} precision {pr.precision} "
            f"recall {pr.recall:.4f} f1 {pr.f1:.4f}"
        )
    return EXIT_OK


def _eval(args: argparse.Namespace) -> int:
    if args.config is None:
        raise ConfigError("eval requires --config")
    return _report(args, load_config(args.config, args.seed))


def _fuzz(args: argparse.Namespace) -> int:
    config = _resolve_config(args, ExperimentName.CI_ORACLE_FUZZ)
    if args.trials is not None:
        config = _with_datagen(config, fuzz_trials=args.trials)
    return _report(args, config)


def _demo(args: argparse.Namespace) -> int:
    exit_code = EXIT_OK
    for name in (ExperimentName.EXAMPLE1_POSTERIOR, ExperimentName.EXAMPLE2_SCORING):
        config = validate_config({CONF_EXPERIMENT: name.value}, args.seed)
        if args.samples is not None:
            config = _with_datagen(config, n_samples=args.samples)
        exit_code = max(exit_code, _report(args, config))
    return exit_code


def _report(args: argparse.Namespace, config: dict[str, Any]) -> int:
    report = run_config(config)
    report.write(args.out_dir)
    print(report.to_table())  # noqa: T201
    return EXIT_OK if report.passed else EXIT_ACCEPTANCE_FAILURE


def _resolve_config(
    args: argparse.Namespace, default: ExperimentName
) -> dict[str, Any]:
    if args.config is not None:
        return load_config(args.config, args.seed)
    return validate_config({CONF_EXPERIMENT: default.value}, args.seed)


def _with_datagen(config: dict[str, Any], **overrides: Any) -> dict[str, Any]:  # noqa: ANN401
    return validate_config(
        {**config, CONF_DATAGEN: {**config[CONF_DATAGEN], **overrides}}
    )


def _load_model(path: pathlib.Path) -> Callable[[FloatArray], FloatArray]:
    document = path.read_text()
    try:
        kind = PredictorKind(json.loads(document)["kind"])
        if kind == PredictorKind.HISTOGRAM:
            return HistogramModel.from_json(document).predict_proba_many
        model = LogisticModel.from_json(document)
    except (KeyError, TypeError, ValueError) as err:
        raise MalformedInput(f"{path}: not a fitted model: {err}") from err
    return lambda x2: model.predict_proba_matrix(x2[:, np.newaxis])


def _log_level(verbose: int) -> int:
    if verbose >= 2:  # noqa: PLR2004
        return logging.DEBUG
    if verbose == 1:
        return logging.INFO
    return logging.WARNING

