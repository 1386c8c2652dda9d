# Defines the prior sources compared by the prior-type ablation
#
# Copyright (c) 2026, pcan developers and contributors


from dataclasses import dataclass
from typing import Optional

from pcan.Geometry.box import Box, BoxConvention, iou
from pcan.Util.exceptions import ConfigurationError, SamplerError


__all__ = ['PriorSource', 'PRIOR_SOURCES', 'DEFAULT_PRIOR_SOURCE',
           'get_prior_source', 'unconstrained_random_negative']


@dataclass(frozen=True)
class PriorSource(object):
    """Where the negatives of a contrastive group come from.

    :param name: identifier used in configurations and reports
    :param detections: 'language' for the expression-relevant detections,
     'all' for the detections of every object, None to skip the detector
    :param top_up: 'conditional' fills missing negatives with band-constrained
     random boxes, 'unconstrained' with arbitrary boxes away from the target
    """
    name: str
    detections: Optional[str]
    top_up: str

    def select_detections(self, scene):
        if self.detections is None:
            return ()
        if self.detections == 'all':
            return scene.all_detections
        return scene.detections


PRIOR_SOURCES = {
    s.name: s for s in (
        PriorSource('gt+unconstrained-random', None, 'unconstrained'),
        PriorSource('gt+conditional-random', None, 'conditional'),
        PriorSource('gt+oracle-detector', 'language', 'unconstrained'),
        PriorSource('gt+all-objects+conditional', 'all', 'conditional'),
        PriorSource('gt+oracle+conditional', 'language', 'conditional'),
    )
}
DEFAULT_PRIOR_SOURCE = 'gt+oracle+conditional'


def get_prior_source(name):
    try:
        return PRIOR_SOURCES[name]
    except KeyError:
        raise ConfigurationError(f"Prior source '{name}' is not supported, "
                                 f"choose among {sorted(PRIOR_SOURCES)}") from None


def unconstrained_random_negative(gt, cfg, rng):
    """Uniformly drawn box that does not cover the target (IoU <= iou_reject).

    :param gt: ground-truth Box (normalized)
    :param cfg: PamConfig
    :param rng: numpy.random.Generator
    """
    gt = gt.to(BoxConvention.CORNER_NORMALIZED)
    for _ in range(cfg.sample_budget):
        x1, x2 = sorted(rng.uniform(0., 1., size=2))
        y1, y2 = sorted(rng.uniform(0., 1., size=2))
        if x2 - x1 < 1e-3 or y2 - y1 < 1e-3:
            continue
        box = Box(x1, y1, x2, y2)
        if iou(box, gt) <= cfg.iou_reject:
            return box
    raise SamplerError(f"No random box with IoU <= {cfg.iou_reject} after "
                       f"{cfg.sample_budget} draws", constraint='iou-reject')
