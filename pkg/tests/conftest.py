"""Pytest configuration and fixtures."""

from __future__ import annotations

from collections.abc import Callable

import numpy as np
import pytest

from cran_compression import ChannelSet, ExperimentConfig, HermitianMatrix

ChannelFactory = Callable[..., ChannelSet]


def random_complex(rng: np.random.Generator, *shape: int) -> np.ndarray:
    """Standard circularly-symmetric complex Gaussian draws."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_psd(rng: np.random.Generator, dim: int, scale: float = 1.0) -> HermitianMatrix:
    """Random positive definite matrix."""
    g = random_complex(rng, dim, dim)
    return HermitianMatrix(scale * (g @ g.conj().T) + 0.1 * np.eye(dim), psd=True)


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator shared by a test."""
    return np.random.default_rng(1234)


@pytest.fixture
def make_channels(rng: np.random.Generator) -> ChannelFactory:
    """Factory of random channel sets with identity transmit covariance."""

    def make(n_b: int = 3, n_ant: int = 2, n_x: int = 3, p_tx: float = 1.0) -> ChannelSet:
        return ChannelSet.from_matrices(
            [random_complex(rng, n_ant, n_x) for _ in range(n_b)], p_tx=p_tx
        )

    return make


@pytest.fixture
def scalar_channels() -> ChannelSet:
    """Two single-antenna BSs with channels 2 and 1 to one single-antenna MS."""
    return ChannelSet.from_matrices([[[2.0]], [[1.0]]])


@pytest.fixture
def tiny_config() -> ExperimentConfig:
    """Small scheme-comparison experiment that runs in well under a second."""
    return {
        "scenario": "compare_schemes",
        "topology": {"n_cells": 1, "n_hbs_per_cell": 2, "n_ms_per_cell": 2},
        "antennas": {"n_bs": 2, "n_ms": 1},
        "snr_db": 0.0,
        "capacity": 4.0,
        "omega": 0.5,
        "n_drops": 3,
        "base_seed": 11,
        "schemes": ["maxrate_si", "maxrate_nsi"],
    }
