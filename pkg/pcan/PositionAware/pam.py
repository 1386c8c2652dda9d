# Defines the position-aware sampling of positive and negative boxes
#
# Copyright (c) 2026, pcan developers and contributors

"""Training-time selection of prior boxes for the contrastive decoder.

The ground-truth box is the positive sample. Negatives are the confident
detections that do not cover the target, completed when there are too few of
them by random boxes drawn around the target inside an IoU band and an
aspect-ratio band. The resulting set is repeated into groups, each group
being a slightly perturbed copy of the first one.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from pcan.Geometry.box import Box, BoxConvention, iou, perturb
from pcan.Geometry import box_ops
from pcan.PositionAware.prior_sources import unconstrained_random_negative
from pcan.SynthData.detector import PriorSample, SampleLabel
from pcan.Util.exceptions import ConfigurationError, SamplerError
from pcan.Util.util import counted


__all__ = ['PamConfig', 'ContrastiveGroupSet', 'select_negatives',
           'random_negative', 'build_groups']


logger = logging.getLogger(__name__)


_MAX_REPERTURB = 10


@dataclass(frozen=True)
class PamConfig(object):
    """
    :param alpha: detector confidence threshold
    :param k_neg: number of negatives per group
    :param k1, k2: open IoU band of the random negatives
    :param r1, r2: open aspect-ratio band multipliers
    :param iou_reject: detections overlapping the target more than this are dropped
    :param groups: number of contrastive groups G
    :param perturb_scale: jitter applied to the boxes of groups
    :param sample_budget: rejection-sampling attempts per random negative
    """
    alpha: float = 0.35
    k_neg: int = 5
    k1: float = 0.1
    k2: float = 0.3
    r1: float = 0.5
    r2: float = 1.5
    iou_reject: float = 0.5
    groups: int = 3
    perturb_scale: float = 0.1
    sample_budget: int = 1000

    @property
    def group_size(self):
        return 1 + self.k_neg

    def validate(self):
        if not 0. <= self.k1 < self.k2 < self.iou_reject <= 1.:
            raise ConfigurationError("PAM bands must satisfy 0 <= k1 < k2 < iou_reject <= 1")
        if not 0. < self.r1 < self.r2:
            raise ConfigurationError("PAM aspect band must satisfy 0 < r1 < r2")
        if not 0. <= self.alpha <= 1.:
            raise ConfigurationError("alpha must lie in [0, 1]")
        if self.groups < 1 or self.k_neg < 0:
            raise ConfigurationError("groups must be >= 1 and k_neg >= 0")
        if not 0. <= self.perturb_scale < 0.5:
            raise ConfigurationError("perturb_scale must lie in [0, 0.5)")


@dataclass(frozen=True)
class ContrastiveGroupSet(object):
    """G groups of (1 + k_neg) prior samples sharing the same layout."""
    groups: Tuple[Tuple[PriorSample, ...], ...]
    positive_index: Tuple[int, ...]

    @property
    def num_groups(self):
        return len(self.groups)

    @property
    def group_size(self):
        return len(self.groups[0])

    def boxes(self):
        """Corner-normalized boxes as an array of shape (G, group_size, 4)."""
        return np.array([[s.box.as_array() for s in group] for group in self.groups])

    def boxes_cxcywh(self):
        return box_ops.box_xyxy_to_cxcywh(self.boxes(), xp=np)

    def labels(self):
        return [[s.label for s in group] for group in self.groups]


def _as_corner(gt):
    return gt.to(BoxConvention.CORNER_NORMALIZED)


def select_negatives(detections, gt, cfg):
    """Confident detections that do not cover the target, best first.

    :param detections: sequence of PriorSample
    :param gt: ground-truth Box
    :param cfg: PamConfig
    :return: at most `k_neg` samples relabelled as detected negatives
    """
    gt = _as_corner(gt)
    survivors = [d for d in detections
                 if d.confidence > cfg.alpha and iou(d.box, gt) <= cfg.iou_reject]
    # sorted() is stable: ties keep the input order
    survivors = sorted(survivors, key=lambda d: -d.confidence)
    return [d.with_label(SampleLabel.NEGATIVE_DETECTED) for d in survivors[:cfg.k_neg]]


def _band_violation(box, gt, image_hw, cfg):
    """Name of the first band a box violates, None inside both bands."""
    height, width = image_hw
    image_aspect = height / width
    pixel_aspect = (box.height * height) / (box.width * width)
    if not cfg.r1 * image_aspect < pixel_aspect < cfg.r2 * image_aspect:
        return 'aspect-band'
    if not cfg.k1 < iou(box, gt) < cfg.k2:
        return 'iou-band'
    return None


def random_negative(gt, image_hw, cfg, rng):
    """Random box around the target inside the IoU and aspect-ratio bands.

    The box satisfies k1 < IoU(box, gt) < k2 and
    r1 * H / W < h / w < r2 * H / W with h, w its pixel height and width.

    :param gt: ground-truth Box (normalized)
    :param image_hw: (H, W) image size in pixels
    :param cfg: PamConfig
    :param rng: numpy.random.Generator
    :raises SamplerError: empty band or exhausted sampling budget
    """
    if not cfg.k1 < cfg.k2:
        raise SamplerError(f"Empty IoU band ({cfg.k1}, {cfg.k2})", constraint='iou-band')
    if not cfg.r1 < cfg.r2:
        raise SamplerError(f"Empty aspect-ratio band ({cfg.r1}, {cfg.r2})", constraint='aspect-band')
    gt = _as_corner(gt)
    gcx, gcy = gt.center
    # IoU <= min(area) / max(area) bounds the useful area range
    log_low = math.log(max(cfg.k1, 1e-3) * gt.area)
    log_high = math.log(min(gt.area / max(cfg.k1, 1e-3), 1.))
    failures = {'image-bounds': 0, 'iou-band': 0, 'aspect-band': 0}
    for _ in range(cfg.sample_budget):
        cx = gcx + rng.uniform(-1., 1.) * gt.width
        cy = gcy + rng.uniform(-1., 1.) * gt.height
        area = math.exp(rng.uniform(log_low, log_high))
        aspect = rng.uniform(cfg.r1, cfg.r2)  # normalized height / width
        w = math.sqrt(area / aspect)
        h = aspect * w
        x1, y1, x2, y2 = cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h
        if x1 < 0. or y1 < 0. or x2 > 1. or y2 > 1.:
            failures['image-bounds'] += 1
            continue
        box = Box(x1, y1, x2, y2)
        violated = _band_violation(box, gt, image_hw, cfg)
        if violated is not None:
            failures[violated] += 1
            continue
        return box
    constraint = max(failures, key=failures.get)
    raise SamplerError(f"No random negative found in {cfg.sample_budget} attempts around {gt}; "
                       f"most violated constraint: {constraint} ({failures})", constraint=constraint)


def _respects_bound(box, gt, kind, cfg, image_hw):
    if kind == 'conditional':
        return _band_violation(box, gt, image_hw, cfg) is None
    overlap = iou(box, gt)
    if kind == 'positive':
        return overlap > cfg.iou_reject
    return overlap <= cfg.iou_reject


def _perturb_checked(sample, kind, gt, cfg, rng, image_hw):
    for _ in range(_MAX_REPERTURB):
        box = perturb(sample.box, cfg.perturb_scale, rng)
        if _respects_bound(box, gt, kind, cfg, image_hw):
            return PriorSample(box, sample.confidence, sample.label)
    warnings.warn(f"A {sample.label.value} sample kept leaving its bounds after "
                  f"{_MAX_REPERTURB} perturbations; it is left unperturbed")
    return sample


@counted
def build_groups(gt, detections, cfg, rng, image_hw=(64, 64), top_up='conditional'):
    """Assemble the contrastive groups of one scene.

    :param gt: ground-truth Box
    :param detections: prior detections of the scene (may be empty)
    :param cfg: PamConfig
    :param rng: numpy.random.Generator
    :param image_hw: (H, W) image size in pixels
    :param top_up: 'conditional' or 'unconstrained' random negatives
    :return: ContrastiveGroupSet with G groups of 1 + k_neg samples
    """
    gt = _as_corner(gt)
    positive = PriorSample(gt, 1., SampleLabel.POSITIVE)
    base = [(positive, 'positive')]
    base += [(d, 'detected') for d in select_negatives(detections, gt, cfg)]
    while len(base) < cfg.group_size:
        if top_up == 'conditional':
            box = random_negative(gt, image_hw, cfg, rng)
        elif top_up == 'unconstrained':
            box = unconstrained_random_negative(gt, cfg, rng)
        else:
            raise ConfigurationError(f"Unknown top-up mode '{top_up}'")
        base.append((PriorSample(box, 0., SampleLabel.NEGATIVE_SYNTHETIC), top_up))
    # the positive takes the same seeded position in every group
    order = rng.permutation(cfg.group_size)
    base = [base[i] for i in order]
    positive_index = int(np.argmin(order))
    groups = []
    for g in range(cfg.groups):
        group = []
        for n, (sample, kind) in enumerate(base):
            if g == 0 and n == positive_index:
                group.append(sample)
            else:
                group.append(_perturb_checked(sample, kind, gt, cfg, rng, image_hw))
        groups.append(tuple(group))
    logger.debug("built %d groups of %d samples (%d detected negatives)",
                 cfg.groups, cfg.group_size, sum(kind == 'detected' for _, kind in base))
    return ContrastiveGroupSet(tuple(groups), (positive_index,) * cfg.groups)
