"""Shared fixtures: default datasets and fitted models are built once per session."""
import pytest

from sheartouch import perception as P
from sheartouch.config import ExperimentConfig
from sheartouch.datasets import collect_multidirectional_set, collect_training_set


@pytest.fixture(scope="session")
def config():
    return ExperimentConfig()


@pytest.fixture(scope="session")
def train(config):
    return collect_training_set(config)


@pytest.fixture(scope="session")
def multi(config):
    return collect_multidirectional_set(config)


@pytest.fixture(scope="session")
def fitted(train):
    return P.fit_perception(train, restarts=5, seed=0, return_selection=True)


@pytest.fixture(scope="session")
def model(fitted):
    return fitted[0]


@pytest.fixture(scope="session")
def baseline(train):
    return P.fit_baseline_model(train, restarts=5, seed=0)
