# Defines the command-line interface
#
# Copyright (c) 2026, pcan developers and contributors


import argparse
import logging
import os
import sys
from dataclasses import replace

from pcan.Analysis.plot import Plotter
from pcan.Analysis.report import render_table
from pcan.Harness import ablation, runner
from pcan.Harness.config import load_config
from pcan.PositionAware.pam import build_groups
from pcan.PositionAware.prior_sources import get_prior_source
from pcan.SynthData.scene import generate_dataset
from pcan.SynthData.serialization import save_dataset
from pcan.Util.exceptions import PCANError
from pcan.Util.util import seeded_rng


__all__ = ['build_parser', 'main']


logger = logging.getLogger(__name__)


def build_parser():
    parser = argparse.ArgumentParser(prog='pcan', description="Referring segmentation on synthetic shapes")
    parser.add_argument('-v', '--verbose', action='store_true', help="debug logging")
    parser.add_argument('-c', '--config', default=None, help="JSON run configuration")
    parser.add_argument('--progress', action='store_true', help="show progress bars")
    verbs = parser.add_subparsers(dest='verb', required=True)

    synth = verbs.add_parser('synth', help="synthetic data")
    synth_verbs = synth.add_subparsers(dest='synth_verb', required=True)
    gen = synth_verbs.add_parser('generate', help="generate and save a dataset")
    gen.add_argument('--out', dest='output_dir', required=True, help="dataset directory")
    gen.add_argument('--n', '--n-scenes', dest='n_scenes', type=int, default=None)
    gen.add_argument('--seed', type=int, default=None)

    train = verbs.add_parser('train', help="train a model")
    train.add_argument('--output-dir', default=None)

    ev = verbs.add_parser('eval', help="evaluate a checkpoint")
    ev.add_argument('checkpoint')
    ev.add_argument('--split', choices=('train', 'val'), default='val')
    ev.add_argument('--output-dir', default=None)

    abl = verbs.add_parser('ablate', help="run an ablation axis")
    abl.add_argument('axis', choices=ablation.AXES)
    abl.add_argument('--output-dir', default=None)

    inf = verbs.add_parser('infer', help="segment scenes with a checkpoint")
    inf.add_argument('checkpoint')
    inf.add_argument('--scene-ids', type=int, nargs='*', default=None)
    inf.add_argument('--split', choices=('train', 'val'), default='val')
    inf.add_argument('--output-dir', default='overlays')
    inf.add_argument('--panels', action='store_true', help="also draw prediction panels")

    pam = verbs.add_parser('pam', help="position-aware sampler")
    pam_verbs = pam.add_subparsers(dest='pam_verb', required=True)
    inspect = pam_verbs.add_parser('inspect', help="draw the contrastive groups of scenes")
    inspect.add_argument('--scene-ids', type=int, nargs='*', default=[0])
    inspect.add_argument('--epoch', type=int, default=1)
    inspect.add_argument('--output-dir', default='pam')
    return parser


def _synth_generate(args, config):
    data = config.data
    n_scenes = data.n_scenes if args.n_scenes is None else args.n_scenes
    seed = data.seed if args.seed is None else args.seed
    records = generate_dataset(n_scenes, seed, data.scene, data.detector, progress_bar=args.progress)
    counts = save_dataset(records, args.output_dir)
    print(' '.join(f"{split}={n}" for split, n in sorted(counts.items())))


def _select(scenes, ids):
    if ids is None:
        return scenes
    by_id = {s.scene_id: s for s in scenes}
    missing = [i for i in ids if i not in by_id]
    if missing:
        raise PCANError(f"Scenes {missing} are not in the split")
    return [by_id[i] for i in ids]


def _infer(args, config):
    predictor, config = runner.load_predictor(args.checkpoint, None if args.config is None else config)
    train_scenes, val_scenes = runner.load_scenes(config)
    scenes = _select(val_scenes if args.split == 'val' else train_scenes, args.scene_ids)
    for scene in scenes:
        path = os.path.join(args.output_dir, f"{scene.scene_id:06d}.png")
        panel = path.replace('.png', '_panel.png') if args.panels else None
        mask, _ = runner.infer(predictor, scene, overlay_path=path, panel_path=panel)
        print(f"{scene.scene_id}\t{scene.expression.text()}\t{int(mask.sum())} px\t{path}")


def _pam_inspect(args, config):
    train_scenes, _ = runner.load_scenes(config)
    source = get_prior_source(config.ablation.effective_prior_source)
    plotter = Plotter()
    for scene in _select(train_scenes, args.scene_ids):
        rng = seeded_rng(config.seed, args.epoch, scene.scene_id)
        group_set = build_groups(scene.target_box, source.select_detections(scene), config.pam, rng,
                                 image_hw=(scene.height, scene.width), top_up=source.top_up)
        path = plotter.contrastive_groups(os.path.join(args.output_dir, f"{scene.scene_id:06d}.png"),
                                          scene, group_set)
        print(f"{scene.scene_id}\t{scene.expression.text()}\t{path}")


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config)
        if getattr(args, 'output_dir', None) is not None and args.verb in ('train', 'ablate'):
            config = replace(config, output_dir=args.output_dir)
        if args.verb == 'synth':
            _synth_generate(args, config)
        elif args.verb == 'train':
            outcome = runner.train(config, progress_bar=args.progress)
            print(f"val oIoU {outcome.report.oiou:.4f} (baseline {outcome.baseline.oiou:.4f})")
        elif args.verb == 'eval':
            report = runner.evaluate_checkpoint(args.checkpoint, args.split,
                                                None if args.config is None else config,
                                                args.output_dir)
            print(f"{args.split} oIoU {report.oiou:.4f} mIoU {report.miou:.4f}")
        elif args.verb == 'ablate':
            reports = ablation.ablate(config, args.axis, progress_bar=args.progress)
            print(render_table(reports), end='')
        elif args.verb == 'infer':
            _infer(args, config)
        elif args.verb == 'pam':
            _pam_inspect(args, config)
    except (PCANError, FileNotFoundError) as e:
        logger.error("%s", e)
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
