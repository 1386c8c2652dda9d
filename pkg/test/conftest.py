# Shared fixtures of the test-suite
#
# Copyright (c) 2026, pcan developers and contributors


import jax
jax.config.update('jax_enable_x64', True)

import numpy as np
import pytest

from pcan.Network.model import ModelConfig, PCANModel
from pcan.PositionAware.pam import PamConfig
from pcan.SynthData.scene import generate_dataset


TINY_MODEL = ModelConfig(hidden_dim=16, num_queries=8, enc_layers=1, dec_layers=2, num_heads=2,
                         ffn_ratio=2, mask_channels=4, embed_dim=8, backbone_width=4)


@pytest.fixture(autouse=True)
def float64():
    # some harness tests switch the precision, restore it for the next test
    jax.config.update('jax_enable_x64', True)
    yield
    jax.config.update('jax_enable_x64', True)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(scope='session')
def scenes():
    return generate_dataset(10, seed=0)


@pytest.fixture(scope='session')
def tiny_model():
    return PCANModel(TINY_MODEL)


@pytest.fixture
def tiny_params(tiny_model):
    return tiny_model.init_params(jax.random.PRNGKey(0))


@pytest.fixture
def pam_config():
    return PamConfig()


@pytest.fixture
def tiny_config(tmp_path):
    from pcan.Harness.config import DataConfig, RunConfig
    return RunConfig(seed=0, epochs=0, batch_size=2, precision='float64',
                     output_dir=str(tmp_path / 'run'), num_overlays=2,
                     data=DataConfig(n_scenes=10, seed=0), model=TINY_MODEL,
                     pam=PamConfig(k_neg=3, groups=2))
