# Handles the optimization of the segmentation model on a set of scenes
#
# Copyright (c) 2026, pcan developers and contributors


import logging
import time
from typing import NamedTuple

import numpy as np
import jax.numpy as jnp
import optax
from tqdm import tqdm

from pcan.Geometry.box import BoxConvention
from pcan.Inference.loss import SceneBatch, check_finite, COST_TERMS
from pcan.PositionAware.pam import build_groups
from pcan.Parameters.parameters import save_checkpoint
from pcan.Util.exceptions import TrainingAbortError
from pcan.Util.util import seeded_rng


__all__ = ['LOSS_COLUMNS', 'learning_rate_schedule', 'make_optimizer', 'TrainResult', 'Trainer']


logger = logging.getLogger(__name__)


LOSS_COLUMNS = (('step', 'epoch') + COST_TERMS
                + ('unmatched_cls', 'contrastive_supervision', 'l_m', 'l_ca', 'total', 'learning_rate'))


def learning_rate_schedule(optim, epochs, steps_per_epoch):
    """Piecewise-constant schedule decaying at fractions of the epoch budget.

    :param optim: OptimConfig
    :param steps_per_epoch: optimizer updates per epoch
    """
    boundaries = {}
    for fraction in optim.milestones:
        step = int(round(fraction * epochs)) * steps_per_epoch
        if step > 0:
            boundaries[step] = boundaries.get(step, 1.) * optim.decay
    return optax.piecewise_constant_schedule(optim.learning_rate, boundaries)


def make_optimizer(optim, schedule):
    """AdamW with optional gradient clipping and accumulation."""
    transforms = []
    if optim.clip_norm > 0:
        transforms.append(optax.clip_by_global_norm(optim.clip_norm))
    transforms.append(optax.adamw(learning_rate=schedule, weight_decay=optim.weight_decay))
    tx = optax.chain(*transforms)
    if optim.accumulate_steps > 1:
        tx = optax.MultiSteps(tx, every_k_schedule=optim.accumulate_steps)
    return tx


class TrainResult(NamedTuple):
    params: dict
    opt_state: tuple
    loss_rows: list       # one dict per step, keys LOSS_COLUMNS
    epoch_loss: list      # mean total loss of every epoch
    reports: list         # per-epoch EvalReport (empty without evaluation)
    runtime: float


class Trainer(object):
    """Mini-batch training loop over synthetic scenes.

    :param model: PCANModel
    :param scene_loss: SceneLoss
    :param pam_config: PamConfig
    :param prior_source: PriorSource feeding the contrastive groups
    :param optim: OptimConfig
    :param seed: run seed; the epoch shuffles and the groups derive from it
    :param batch_size: scenes per batch
    """

    def __init__(self, model, scene_loss, pam_config, prior_source, optim, seed=0,
                 batch_size=4, use_clum=True):
        self._model = model
        self._loss = scene_loss
        self._pam = pam_config
        self._source = prior_source
        self._optim = optim
        self._seed = seed
        self._batch_size = batch_size
        self._use_clum = use_clum

    def epoch_order(self, num_scenes, epoch):
        """Seeded permutation of the scene indices for one epoch."""
        return seeded_rng(self._seed, epoch).permutation(num_scenes)

    def batches(self, num_scenes, epoch):
        order = self.epoch_order(num_scenes, epoch)
        return [order[i:i + self._batch_size] for i in range(0, num_scenes, self._batch_size)]

    def scene_groups(self, scene, epoch):
        """Contrastive boxes (G, K, 4) and positive indices (G,) of a scene."""
        cfg = self._pam
        if not self._use_clum:
            return (np.zeros((cfg.groups, cfg.group_size, 4)),
                    np.zeros(cfg.groups, dtype=np.int32))
        rng = seeded_rng(self._seed, epoch, scene.scene_id)
        group_set = build_groups(scene.target_box, self._source.select_detections(scene), cfg, rng,
                                 image_hw=(scene.height, scene.width), top_up=self._source.top_up)
        return group_set.boxes_cxcywh(), np.asarray(group_set.positive_index, dtype=np.int32)

    def make_batch(self, scenes, epoch):
        groups = [self.scene_groups(s, epoch) for s in scenes]
        return SceneBatch(
            images=jnp.asarray(np.stack([s.image for s in scenes])),
            tokens=jnp.asarray(np.stack([s.padded_tokens(self._model.config.max_tokens) for s in scenes])),
            gt_boxes=jnp.asarray(np.stack([s.target_box.to(BoxConvention.CENTER_SIZE_NORMALIZED).as_array()
                                           for s in scenes])),
            gt_masks=jnp.asarray(np.stack([s.mask_at_stride(8) for s in scenes])),
            group_boxes=jnp.asarray(np.stack([g[0] for g in groups])),
            positive_index=jnp.asarray(np.stack([g[1] for g in groups])))

    def fit(self, params, scenes, epochs, evaluate=None, checkpoint_path=None,
            config=None, config_hash='', progress_bar=False):
        """Train `params` on `scenes` for `epochs` epochs.

        :param evaluate: optional callable (params, epoch) -> EvalReport run
         after every epoch
        :param checkpoint_path: where the last good state is written after the
         initialization and after every epoch
        :param config, config_hash: metadata stored in the checkpoints
        :return: TrainResult
        """
        batches_per_epoch = max(1, int(np.ceil(len(scenes) / self._batch_size)))
        updates_per_epoch = max(1, batches_per_epoch // self._optim.accumulate_steps)
        schedule = learning_rate_schedule(self._optim, epochs, updates_per_epoch)
        optim = make_optimizer(self._optim, schedule)
        opt_state = optim.init(params)

        def save(epoch):
            if checkpoint_path is not None:
                save_checkpoint(checkpoint_path, params, opt_state, epoch, config or {}, config_hash)

        save(0)
        loss_rows, epoch_loss, reports = [], [], []
        step = 0
        start_time = time.time()
        for epoch in self._for_loop(range(1, epochs + 1), progress_bar,
                                    total=epochs, desc="optax.adamw"):
            totals = []
            for idx in self.batches(len(scenes), epoch):
                batch = self.make_batch([scenes[i] for i in idx], epoch)
                (loss, aux), grads = self._loss.value_and_grad(params, batch)
                row = {k: float(jnp.mean(v)) for k, v in aux.items() if k != 'index'}
                try:
                    check_finite(dict(row, gradient=optax.global_norm(grads)))
                except TrainingAbortError as e:
                    logger.error("aborting at epoch %d step %d: %s", epoch, step, e)
                    raise TrainingAbortError(str(e), component=e.component,
                                             checkpoint_path=checkpoint_path) from None
                updates, opt_state = optim.update(grads, opt_state, params)
                params = optax.apply_updates(params, updates)
                row.update(step=step, epoch=epoch,
                           learning_rate=float(schedule(step // self._optim.accumulate_steps)))
                loss_rows.append(row)
                logger.debug("step %d %s", step, ' '.join(f"{k}={v:.4g}" for k, v in row.items()
                                                         if k not in ('step', 'epoch')))
                totals.append(float(loss))
                step += 1
            epoch_loss.append(float(np.mean(totals)))
            save(epoch)
            if evaluate is not None:
                report = evaluate(params, epoch)
                reports.append(report)
                logger.info("epoch %d: loss %.4f, val oIoU %.4f", epoch, epoch_loss[-1], report.oiou)
            else:
                logger.info("epoch %d: loss %.4f", epoch, epoch_loss[-1])
        runtime = time.time() - start_time
        return TrainResult(params, opt_state, loss_rows, epoch_loss, reports, runtime)

    @staticmethod
    def _for_loop(iterable, progress_bar_bool, **tqdm_kwargs):
        if progress_bar_bool is True:
            return tqdm(iterable, **tqdm_kwargs)
        else:
            return iterable
