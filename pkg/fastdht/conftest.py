#!/usr/bin/env python3

"""
Fast DHT - pytest Configuration
"""

import json
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from utils.kernels import SUPPORTED_LENGTHS, kernel_registry  # noqa: E402

SEED = 20240229


@pytest.fixture
def rng():
    """Seeded random generator"""
    return np.random.default_rng(SEED)


@pytest.fixture(scope="session")
def registry():
    """The shared kernel registry"""
    return kernel_registry


@pytest.fixture(scope="session")
def supported_lengths():
    return SUPPORTED_LENGTHS


@pytest.fixture
def random_batches(rng):
    """1000 signals per supported length, entries uniform in [-1, 1]"""
    return {n: rng.uniform(-1.0, 1.0, (1000, n)) for n in SUPPORTED_LENGTHS}


@pytest.fixture
def csv_signal_file(tmp_path):
    """Two 3-point signals, with a blank line between them"""
    path = tmp_path / "signals.csv"
    path.write_text("1,2,3\n\n0.5,-1.25,4\n", encoding="utf-8")
    return path


@pytest.fixture
def json_signal_file(tmp_path, rng):
    """Three random 24-point signals"""
    path = tmp_path / "signals.json"
    path.write_text(json.dumps(rng.uniform(-1.0, 1.0, (3, 24)).tolist()), encoding="utf-8")
    return path
