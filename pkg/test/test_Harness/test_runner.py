import csv
import json
import os
from dataclasses import replace

import jax
import numpy as np
import numpy.testing as npt
import pytest

from pcan.Harness import runner
from pcan.Harness.config import DataConfig, load_config
from pcan.Network.model import PCANModel
from pcan.Network.queries import make_contrastive_bundles
from pcan.Parameters.parameters import Parameters, load_checkpoint
from pcan.PositionAware.pam import PamConfig, build_groups
from pcan.SynthData.detector import oracle_detect
from pcan.SynthData.serialization import save_dataset
from pcan.Util.exceptions import ConfigurationError


def test_zero_epochs_checkpoint_holds_the_initialization(tiny_config):
    outcome = runner.train(tiny_config)
    init = PCANModel(tiny_config.model).init_params(jax.random.PRNGKey(tiny_config.seed))
    restored = load_checkpoint(outcome.checkpoint_path, init)
    assert restored.epoch == 0
    assert Parameters(restored.params).checksum() == Parameters(init).checksum()
    out_dir = tiny_config.output_dir
    for name in ('checkpoint.npz', 'loss.csv', 'metrics.json', 'report.txt'):
        assert os.path.isfile(os.path.join(out_dir, name))
    assert not os.path.exists(os.path.join(out_dir, 'loss.png'))
    assert len(os.listdir(os.path.join(out_dir, 'overlays'))) == 2
    with open(os.path.join(out_dir, 'metrics.json')) as f:
        metrics = json.load(f)
    assert metrics['history'] == [] and metrics['final']['num_pairs'] == 2
    assert 'largest-object baseline' in open(os.path.join(out_dir, 'report.txt')).read()


def test_training_writes_its_history(tiny_config):
    outcome = runner.train(replace(tiny_config, epochs=1))
    assert len(outcome.history) == 1 and len(outcome.epoch_loss) == 1
    with open(os.path.join(tiny_config.output_dir, 'loss.csv')) as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 4  # 8 training scenes in batches of 2
    assert float(rows[0]['l_ca']) > 0.
    assert os.path.isfile(os.path.join(tiny_config.output_dir, 'loss.png'))
    assert 0. <= outcome.report.oiou <= 1.


def test_runs_are_deterministic(tiny_config):
    config = replace(tiny_config, epochs=1)
    scenes = runner.load_scenes(config)
    a = runner.train(config, scenes=scenes, write_outputs=False)
    b = runner.train(config, scenes=scenes, write_outputs=False)
    assert a.checkpoint_path is None
    assert Parameters(a.params).checksum() == Parameters(b.params).checksum()
    assert a.report == b.report and a.epoch_loss == b.epoch_loss


def test_inference_never_samples_groups_or_detects(tiny_config, tmp_path):
    dataset_dir = str(tmp_path / 'data')
    train_scenes, val_scenes = runner.load_scenes(tiny_config)
    save_dataset(train_scenes + val_scenes, dataset_dir)
    config = replace(tiny_config, data=replace(tiny_config.data, dataset_dir=dataset_dir))
    outcome = runner.train(config)
    detections, groups = oracle_detect.calls, build_groups.calls
    predictor, restored_config = runner.load_predictor(outcome.checkpoint_path)
    assert restored_config == config
    report = runner.evaluate_checkpoint(outcome.checkpoint_path, 'val', output_dir=str(tmp_path / 'eval'))
    assert report == replace(outcome.report, name='val')
    mask, overlay = runner.infer(predictor, val_scenes[0], overlay_path=str(tmp_path / 'o.png'),
                                 panel_path=str(tmp_path / 'panel.png'))
    assert mask.shape == (64, 64) and mask.dtype == bool and overlay.shape == (64, 64, 3)
    assert os.path.isfile(str(tmp_path / 'o.png')) and os.path.isfile(str(tmp_path / 'panel.png'))
    npt.assert_array_equal(mask, predictor.scene_mask(val_scenes[0]))
    assert (oracle_detect.calls, build_groups.calls) == (detections, groups)


def test_predictor_refuses_training_inputs(tiny_model, tiny_params):
    with pytest.raises(ConfigurationError):
        runner.Predictor(tiny_model, tiny_params, pam_config=PamConfig())
    bundles = make_contrastive_bundles(np.ones(16), np.full((1, 4, 4), .5), tiny_params['anchors'])
    with pytest.raises(ConfigurationError):
        runner.Predictor(tiny_model, tiny_params, bundles=bundles)


def test_predictor_segments_the_best_query(tiny_model, tiny_params, scenes):
    predictor = runner.Predictor(tiny_model, tiny_params)
    scene = scenes[0]
    logits, best = predictor.logits(scene.image, scene.padded_tokens())
    npt.assert_array_equal(predictor.scene_mask(scene), np.asarray(logits) > 0.)
    assert 0 <= int(best) < 8


def test_load_scenes_splits(tiny_config):
    train_scenes, val_scenes = runner.load_scenes(tiny_config)
    assert len(train_scenes) == 8 and len(val_scenes) == 2
    with pytest.raises(FileNotFoundError):
        runner.load_scenes(replace(tiny_config, data=DataConfig(dataset_dir='/nonexistent')))


def test_empty_validation_split_is_rejected(tiny_config, scenes):
    with pytest.raises(ConfigurationError):
        runner.train(tiny_config, scenes=(list(scenes), []), write_outputs=False)


@pytest.mark.slow
def test_toy_run_beats_the_largest_object_baseline(tmp_path):
    config = replace(load_config(os.path.join(os.path.dirname(__file__), '..', '..', 'configs', 'toy.json'),
                                 environ={}), output_dir=str(tmp_path / 'toy'))
    outcome = runner.train(config)
    assert outcome.epoch_loss[-1] < outcome.epoch_loss[0]
    assert outcome.report.oiou > outcome.baseline.oiou
