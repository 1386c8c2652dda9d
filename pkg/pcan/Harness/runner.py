# Runs training, evaluation and inference from a run configuration
#
# Copyright (c) 2026, pcan developers and contributors


import csv
import logging
import os
from typing import NamedTuple

import jax
import jax.numpy as jnp

from pcan.Analysis import metrics
from pcan.Analysis.plot import Plotter, overlay_image
from pcan.Analysis.report import evaluate_pairs, render_table
from pcan.Harness.config import config_from_dict, config_to_dict, config_hash
from pcan.Inference.loss import SceneLoss
from pcan.Inference.optimization import Trainer, LOSS_COLUMNS
from pcan.Network.model import PCANModel
from pcan.Parameters.parameters import load_checkpoint, read_checkpoint_meta
from pcan.PositionAware.prior_sources import get_prior_source
from pcan.SynthData.scene import generate_dataset
from pcan.SynthData.serialization import load_dataset
from pcan.Util.exceptions import ConfigurationError
from pcan.Util.image_util import binarize
from pcan.Util.util import write_json


__all__ = ['CHECKPOINT_NAME', 'set_precision', 'load_scenes', 'Predictor', 'evaluate_scenes',
           'baseline_report', 'TrainOutcome', 'train', 'evaluate_checkpoint', 'infer',
           'load_predictor', 'write_loss_csv']


logger = logging.getLogger(__name__)


CHECKPOINT_NAME = 'checkpoint.npz'


def set_precision(precision):
    jax.config.update('jax_enable_x64', precision == 'float64')


def load_scenes(config):
    """Train and validation scenes of a run, read from disk or generated."""
    data = config.data
    if data.dataset_dir is not None:
        return load_dataset(data.dataset_dir, 'train'), load_dataset(data.dataset_dir, 'val')
    records = generate_dataset(data.n_scenes, data.seed, data.scene, data.detector)
    return ([r for r in records if r.split == 'train'],
            [r for r in records if r.split == 'val'])


class Predictor(object):
    """Inference on single scenes with the matching queries only.

    Inference never builds contrastive groups: passing a sampler
    configuration or a contrastive query bundle fails at construction.
    """

    def __init__(self, model, params, pam_config=None, bundles=()):
        if pam_config is not None:
            raise ConfigurationError("Inference does not sample contrastive groups")
        if any(b.is_contrastive for b in bundles):
            raise ConfigurationError("Inference runs the matching queries only, "
                                     "contrastive bundles are training-only")
        self._model = model
        self._params = params

    @property
    def model(self):
        return self._model

    @property
    def params(self):
        return self._params

    def logits(self, image, tokens):
        """Full-resolution mask logits of the best query, and its index."""
        return self._model.segment(self._params, jnp.asarray(image), jnp.asarray(tokens))

    def segment(self, image, tokens, threshold=0.5):
        logits, _ = self.logits(image, tokens)
        return binarize(logits, threshold)

    def scene_mask(self, scene):
        return self.segment(scene.image, scene.padded_tokens(self._model.config.max_tokens))


def evaluate_scenes(predictor, scenes, name='val'):
    """EvalReport of a predictor on a list of scenes, with the predicted masks."""
    preds = [predictor.scene_mask(s) for s in scenes]
    pairs = [(p, s.target_mask) for p, s in zip(preds, scenes)]
    return evaluate_pairs(name, pairs, [s.expression_length for s in scenes]), preds


def baseline_report(scenes, name='largest-object baseline'):
    masks = metrics.heuristic_baseline_masks(scenes)
    pairs = [(m, s.target_mask) for m, s in zip(masks, scenes)]
    return evaluate_pairs(name, pairs, [s.expression_length for s in scenes])


def write_loss_csv(rows, path):
    with open(path, 'w', newline='') as f:
        writer = csv.DictWriter(f, fieldnames=LOSS_COLUMNS, extrasaction='ignore')
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _write_overlays(plotter, directory, scenes, preds, count):
    for scene, pred in list(zip(scenes, preds))[:count]:
        plotter.save_overlay(os.path.join(directory, f"{scene.scene_id:06d}.png"),
                             scene.image, pred, scene.target_mask)


class TrainOutcome(NamedTuple):
    params: dict
    report: object            # final validation EvalReport
    baseline: object          # EvalReport of the largest-object heuristic
    history: list             # per-epoch validation EvalReport
    epoch_loss: list
    checkpoint_path: str


def train(config, scenes=None, progress_bar=False, write_outputs=True):
    """Train a model as configured and evaluate it on the validation split.

    :param config: RunConfig
    :param scenes: optional (train, val) scene lists, loaded from the
     configuration otherwise
    :return: TrainOutcome
    """
    config.validate()
    set_precision(config.precision)
    train_scenes, val_scenes = load_scenes(config) if scenes is None else scenes
    if not train_scenes or not val_scenes:
        raise ConfigurationError("Training needs non-empty train and val splits")
    out_dir = config.output_dir
    if write_outputs:
        os.makedirs(out_dir, exist_ok=True)
    model = PCANModel(config.model)
    params = model.init_params(jax.random.PRNGKey(config.seed))
    switches = config.ablation
    scene_loss = SceneLoss(model, config.loss, use_clum=switches.use_clum,
                           use_contrastive_loss=switches.use_contrastive_loss)
    trainer = Trainer(model, scene_loss, config.pam, get_prior_source(switches.effective_prior_source),
                      config.optim, seed=config.seed, batch_size=config.batch_size,
                      use_clum=switches.use_clum)

    def evaluate(p, epoch):
        return evaluate_scenes(Predictor(model, p), val_scenes, name=f"epoch {epoch}")[0]

    checkpoint_path = os.path.join(out_dir, CHECKPOINT_NAME) if write_outputs else None
    logger.info("training on %d scenes for %d epochs (switches %s)", len(train_scenes),
                config.epochs, switches)
    result = trainer.fit(params, train_scenes, config.epochs, evaluate=evaluate,
                         checkpoint_path=checkpoint_path, config=config_to_dict(config),
                         config_hash=config_hash(config), progress_bar=progress_bar)
    predictor = Predictor(model, result.params)
    report, preds = evaluate_scenes(predictor, val_scenes, name='val')
    baseline = baseline_report(val_scenes)
    logger.info("validation oIoU %.4f (baseline %.4f)", report.oiou, baseline.oiou)
    if write_outputs:
        write_loss_csv(result.loss_rows, os.path.join(out_dir, 'loss.csv'))
        write_json({'final': report.to_dict(), 'baseline': baseline.to_dict(),
                    'history': [r.to_dict() for r in result.reports],
                    'epoch_loss': result.epoch_loss, 'config_hash': config_hash(config)},
                   os.path.join(out_dir, 'metrics.json'))
        with open(os.path.join(out_dir, 'report.txt'), 'w') as f:
            f.write(render_table([baseline, report]))
        plotter = Plotter()
        if result.epoch_loss:
            plotter.loss_curve(os.path.join(out_dir, 'loss.png'), result.epoch_loss)
        _write_overlays(plotter, os.path.join(out_dir, 'overlays'), val_scenes, preds,
                        config.num_overlays)
    return TrainOutcome(result.params, report, baseline, result.reports, result.epoch_loss,
                        checkpoint_path)


def load_predictor(checkpoint_path, config=None):
    """Predictor restored from a checkpoint.

    :param config: RunConfig; None uses the configuration stored in the checkpoint
    :return: (Predictor, RunConfig)
    """
    if config is None:
        config = config_from_dict(read_checkpoint_meta(checkpoint_path)['config'])
    set_precision(config.precision)
    model = PCANModel(config.model)
    template = jax.eval_shape(model.init_params, jax.random.PRNGKey(0))
    checkpoint = load_checkpoint(checkpoint_path, template)
    return Predictor(model, checkpoint.params), config


def evaluate_checkpoint(checkpoint_path, split='val', config=None, output_dir=None):
    """Evaluate a checkpoint on one split; writes metrics.json and report.txt."""
    predictor, config = load_predictor(checkpoint_path, config)
    train_scenes, val_scenes = load_scenes(config)
    scenes = val_scenes if split == 'val' else train_scenes
    report, _ = evaluate_scenes(predictor, scenes, name=split)
    baseline = baseline_report(scenes)
    if output_dir is not None:
        os.makedirs(output_dir, exist_ok=True)
        write_json({'final': report.to_dict(), 'baseline': baseline.to_dict()},
                   os.path.join(output_dir, 'metrics.json'))
        with open(os.path.join(output_dir, 'report.txt'), 'w') as f:
            f.write(render_table([baseline, report]))
    return report


def infer(predictor, scene, overlay_path=None, panel_path=None):
    """Binary mask of the referred object and its overlay on the image.

    :param panel_path: optional figure with the image, the overlay against the
     target and the mask probability
    :return: (mask of the image shape, RGB overlay)
    """
    logits, _ = predictor.logits(scene.image, scene.padded_tokens(predictor.model.config.max_tokens))
    mask = binarize(logits)
    overlay = overlay_image(scene.image, mask)
    if overlay_path is not None:
        Plotter().save_overlay(overlay_path, scene.image, mask)
    if panel_path is not None:
        Plotter().prediction_panel(panel_path, scene, mask, logits=logits)
    return mask, overlay
