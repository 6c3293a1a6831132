# tests/conftest.py — shared fixtures and markers
from pathlib import Path

import numpy as np
import pytest

from dostbc.code_core import (
    DistributedCode,
    construct_alamouti,
    construct_paired_alamouti,
    construct_rate_halving,
    construct_repetition,
)

ASSETS = Path(__file__).resolve().parent.parent / "demo_assets"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long Monte Carlo or exhaustive runs")


@pytest.fixture
def assets() -> Path:
    return ASSETS


@pytest.fixture
def alamouti() -> DistributedCode:
    return construct_alamouti()


@pytest.fixture
def rate_halving_44() -> DistributedCode:
    return construct_rate_halving(4, 4)


@pytest.fixture
def repetition3() -> DistributedCode:
    return construct_repetition(3)


@pytest.fixture
def paired_44() -> DistributedCode:
    return construct_paired_alamouti(4, 4)


@pytest.fixture
def double_transmit() -> DistributedCode:
    """N=1, K=2, T=1: both relays send s1 in the only slot."""
    a = np.ones((2, 1, 1), dtype=complex)
    return DistributedCode.from_arrays(a, np.zeros_like(a))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
