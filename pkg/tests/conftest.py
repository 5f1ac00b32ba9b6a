"""Shared fixtures."""

from __future__ import annotations

import numpy as np
import pytest

from surrogate_learning.datagen import FieldNoise, LinkageCorpusSpec, gen_linkage_corpus
from surrogate_learning.oracle import CIJointSpec, DiscreteJoint, joint_from_ci_spec
from surrogate_learning.records import LinkageCorpus


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture
def recall_joint() -> DiscreteJoint:
    """A small joint in which every positive has x1=1."""
    return joint_from_ci_spec(
        CIJointSpec(
            p_y0=0.6,
            p_x1_given_y=(0.5, 1.0),
            p_x2_given_y=(
                np.array([0.4, 0.3, 0.2, 0.1]),
                np.array([0.1, 0.2, 0.3, 0.4]),
            ),
        )
    )


@pytest.fixture(scope="session")
def clean_corpus() -> LinkageCorpus:
    """A small corpus whose true matches are exact copies."""
    return gen_linkage_corpus(
        LinkageCorpusSpec(
            n_master=2000,
            n_update=100,
            match_fraction=0.9,
            name_pool_size=200,
            field_noise=FieldNoise.none(),
            seed=11,
        )
    )


@pytest.fixture(scope="session")
def small_corpus() -> LinkageCorpus:
    """A small corpus with the default field noise."""
    return gen_linkage_corpus(
        LinkageCorpusSpec(n_master=3000, n_update=200, name_pool_size=300, seed=5)
    )


@pytest.fixture(scope="session")
def default_corpus() -> LinkageCorpus:
    return gen_linkage_corpus(LinkageCorpusSpec())


def pytest_addoption(parser: pytest.Parser) -> None:
    parser.addoption(
        "--update-golden",
        action="store_true",
        default=False,
        help="rewrite the stored experiment reports in tests/golden",
    )


@pytest.fixture
def update_golden(request: pytest.FixtureRequest) -> bool:
    return bool(request.config.getoption("--update-golden"))
