from pathlib import Path

import pytest

from src.maxplus_tails.models.library import builtin
from src.maxplus_tails.models.settings import EstimationSettings

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def config_dir() -> Path:
    return CONFIG_DIR


@pytest.fixture
def small_settings() -> EstimationSettings:
    """Monte Carlo settings small enough for unit tests."""
    return EstimationSettings(
        seed=11,
        n=8,
        replicas=20_000,
        block_size=5_000,
        gamma_horizon=200,
        gamma_replicas=64,
        tail_replicas=20_000,
        quantile_window=(0.9, 0.99),
        bootstrap=30,
    )


@pytest.fixture
def mm1():
    return builtin("mm1", mu=1.0, lam=0.5)


@pytest.fixture
def tandem_identical():
    return builtin("tandem_identical", mu=1.0, lam=0.4)


@pytest.fixture
def tandem_independent():
    return builtin("tandem_independent", mu1=1.0, mu2=1.5, lam=0.5)


@pytest.fixture
def fork_join():
    return builtin("fork_join", mu1=1.0, mu2=0.8, mu3=1.2, lam=0.5)


@pytest.fixture
def resequencing():
    return builtin("resequencing", mu2=1.2, mu3=0.8, lam=1.0, p=0.7)
