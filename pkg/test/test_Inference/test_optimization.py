from dataclasses import replace

import jax
import jax.numpy as jnp
import numpy as np
import numpy.testing as npt
import optax
import pytest

from pcan.Harness.config import OptimConfig
from pcan.Inference.loss import LossWeights, SceneLoss
from pcan.Inference.optimization import LOSS_COLUMNS, Trainer, learning_rate_schedule, make_optimizer
from pcan.Parameters.parameters import Parameters, load_checkpoint, read_checkpoint_meta
from pcan.PositionAware.prior_sources import get_prior_source
from pcan.PositionAware.pam import build_groups
from pcan.Util.exceptions import TrainingAbortError


def _trainer(model, pam_config, use_clum=True, optim=None, seed=0):
    loss = SceneLoss(model, LossWeights(), use_clum=use_clum)
    return Trainer(model, loss, replace(pam_config, k_neg=3, groups=2),
                   get_prior_source('gt+oracle+conditional'), optim or OptimConfig(learning_rate=1e-3),
                   seed=seed, batch_size=2, use_clum=use_clum)


def test_schedule_decays_at_the_milestones():
    schedule = learning_rate_schedule(OptimConfig(learning_rate=1., milestones=(.5, .75), decay=.1),
                                      epochs=4, steps_per_epoch=3)
    npt.assert_allclose([schedule(s) for s in (0, 5, 6, 8, 9, 20)], [1., 1., .1, .1, .01, .01])


def test_epoch_order_is_seeded(tiny_model, pam_config):
    trainer = _trainer(tiny_model, pam_config)
    assert sorted(trainer.epoch_order(10, 1)) == list(range(10))
    npt.assert_array_equal(trainer.epoch_order(10, 1), _trainer(tiny_model, pam_config).epoch_order(10, 1))
    assert not np.array_equal(trainer.epoch_order(10, 1), trainer.epoch_order(10, 2))
    assert [len(b) for b in trainer.batches(5, 1)] == [2, 2, 1]


def test_groups_without_the_contrastive_path(tiny_model, pam_config, scenes):
    before = build_groups.calls
    boxes, positive = _trainer(tiny_model, pam_config, use_clum=False).scene_groups(scenes[0], 1)
    assert boxes.shape == (2, 4, 4) and positive.shape == (2,)
    assert build_groups.calls == before


def test_one_step_updates_the_parameters(tiny_model, tiny_params, pam_config, scenes, tmp_path):
    path = str(tmp_path / 'checkpoint.npz')
    result = _trainer(tiny_model, pam_config).fit(tiny_params, scenes[:2], epochs=1, checkpoint_path=path,
                                                  config={'seed': 0}, config_hash='abc')
    assert Parameters(result.params).checksum() != Parameters(tiny_params).checksum()
    assert len(result.loss_rows) == 1 and set(result.loss_rows[0]) == set(LOSS_COLUMNS)
    assert len(result.epoch_loss) == 1 and result.reports == []
    meta = read_checkpoint_meta(path)
    assert meta['epoch'] == 1 and meta['config_hash'] == 'abc'
    restored = load_checkpoint(path, tiny_params)
    assert Parameters(restored.params).checksum() == Parameters(result.params).checksum()


def test_zero_epochs_keep_the_initialization(tiny_model, tiny_params, pam_config, scenes, tmp_path):
    path = str(tmp_path / 'checkpoint.npz')
    result = _trainer(tiny_model, pam_config).fit(tiny_params, scenes[:2], epochs=0, checkpoint_path=path)
    assert result.loss_rows == [] and result.epoch_loss == []
    restored = load_checkpoint(path, tiny_params)
    assert restored.epoch == 0
    assert Parameters(restored.params).checksum() == Parameters(tiny_params).checksum()


def test_training_is_deterministic(tiny_model, tiny_params, pam_config, scenes):
    a = _trainer(tiny_model, pam_config).fit(tiny_params, scenes[:4], epochs=1)
    b = _trainer(tiny_model, pam_config).fit(tiny_params, scenes[:4], epochs=1)
    assert Parameters(a.params).checksum() == Parameters(b.params).checksum()
    assert a.loss_rows == b.loss_rows


def test_evaluation_hook_runs_every_epoch(tiny_model, tiny_params, pam_config, scenes):
    seen = []

    class Report(object):
        oiou = 0.5

    def evaluate(params, epoch):
        seen.append(epoch)
        return Report()
    result = _trainer(tiny_model, pam_config).fit(tiny_params, scenes[:2], epochs=2, evaluate=evaluate)
    assert seen == [1, 2] and len(result.reports) == 2


def test_non_finite_loss_aborts(tiny_model, tiny_params, pam_config, scenes, tmp_path):
    path = str(tmp_path / 'checkpoint.npz')
    broken = dict(tiny_params, anchors=jnp.full_like(tiny_params['anchors'], jnp.nan))
    with pytest.raises(TrainingAbortError) as info:
        _trainer(tiny_model, pam_config).fit(broken, scenes[:2], epochs=1, checkpoint_path=path)
    assert info.value.checkpoint_path == path and info.value.component is not None
    assert read_checkpoint_meta(path)['epoch'] == 0


def test_accumulation_delays_the_update(tiny_params):
    optim = OptimConfig(learning_rate=1e-2, accumulate_steps=2)
    tx = make_optimizer(optim, learning_rate_schedule(optim, 1, 1))
    state = tx.init(tiny_params)
    grads = jax.tree_util.tree_map(jnp.ones_like, tiny_params)
    updates, state = tx.update(grads, state, tiny_params)
    assert float(optax.global_norm(updates)) == 0.
    updates, state = tx.update(grads, state, tiny_params)
    assert float(optax.global_norm(updates)) > 0.
