import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from models.run_config import RunConfig
from services.data_service import DataService


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_dataset(rng):
    """Three well-separated classes, 60 / 30 / 20 rows, 6 features"""
    return DataService.synth_imbalanced(3, [60, 30, 20], 6, 4.0, rng)


@pytest.fixture
def tiny_config(tmp_path):
    """A run that finishes in well under a second"""
    return RunConfig(
        synth_class_counts=(80, 40, 30),
        synth_dim=6,
        num_clients=3,
        rounds=2,
        local_epochs=1,
        batch_size=16,
        variant='sentinel-1',
        alpha=1.0,
        min_per_client=10,
        report_wall_time=False,
        output_dir=str(tmp_path / 'run'),
    )
