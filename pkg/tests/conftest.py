"""Shared pytest fixtures for PyMBQC tests."""

import json

import pytest


@pytest.fixture
def seed():
    """Fixed seed for reproducible tests."""
    return 42


@pytest.fixture
def small_config(seed, tmp_path):
    """Quick experiment config: two chain gates, few perturbed samples."""
    return {
        "seed": seed,
        "backend": "both",
        "graph": {"chain": 4},
        "plans": [{"gate": "hadamard"}, {"gate": "zrot", "params": {"theta": 0.7}}],
        "perturbation": {"model": "random_local_rotation", "max_strength": 0.5, "samples": 2},
        "sweep": {"parameter": "beta", "start": 0.0, "stop": 0.4, "step": 0.2},
        "outputs": {"directory": str(tmp_path / "results")},
    }


@pytest.fixture
def config_file(small_config, tmp_path):
    """small_config written to a JSON file."""
    path = tmp_path / "config.json"
    path.write_text(json.dumps(small_config))
    return path
