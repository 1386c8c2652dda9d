# Defines the oracle prior detector and the prior samples it emits
#
# Copyright (c) 2026, pcan developers and contributors


import logging
import math
import warnings
from dataclasses import dataclass
from enum import Enum

from scipy.stats import truncnorm

from pcan.Geometry.box import Box, BoxConvention, perturb
from pcan.Util.exceptions import ConfigurationError, InvalidBoxError
from pcan.Util.util import counted


__all__ = ['SampleLabel', 'PriorSample', 'DetectorNoiseConfig',
           'relevant_objects', 'oracle_detect']


logger = logging.getLogger(__name__)


class SampleLabel(str, Enum):
    POSITIVE = 'positive'
    NEGATIVE_DETECTED = 'negative-detected'
    NEGATIVE_SYNTHETIC = 'negative-synthetic'


@dataclass(frozen=True)
class PriorSample(object):
    """A box with its detector confidence and its contrastive label.

    Synthetic negatives never went through a detector and carry confidence 0.
    """
    box: Box
    confidence: float
    label: SampleLabel

    def __post_init__(self):
        object.__setattr__(self, 'label', SampleLabel(self.label))
        object.__setattr__(self, 'confidence', float(self.confidence))
        if self.box.convention is not BoxConvention.CORNER_NORMALIZED:
            raise InvalidBoxError("Prior samples hold corner-normalized boxes")
        if not (math.isfinite(self.confidence) and 0. <= self.confidence <= 1.):
            raise ValueError(f"confidence must lie in [0, 1], got {self.confidence}")
        if self.label is SampleLabel.NEGATIVE_SYNTHETIC and self.confidence != 0.:
            raise ValueError("synthetic negatives carry confidence 0")

    def with_label(self, label):
        return PriorSample(self.box, self.confidence, label)

    def to_dict(self):
        return {'box': [self.box.x1, self.box.y1, self.box.x2, self.box.y2],
                'confidence': self.confidence,
                'label': self.label.value}

    @classmethod
    def from_dict(cls, d):
        return cls(Box(*d['box']), d['confidence'], d['label'])


@dataclass(frozen=True)
class DetectorNoiseConfig(object):
    """
    :param box_jitter: corner noise magnitude, as a fraction of the box side
    :param confidence_mean: mean of the (truncated) normal confidence law
    :param confidence_std: its standard deviation; 0 returns the mean
    :param max_detections: cap M on the number of detections
    :param mode: 'language' detects the objects sharing an attribute word with
     the expression, 'all' detects every object of the scene
    """
    box_jitter: float = 0.1
    confidence_mean: float = 0.8
    confidence_std: float = 0.1
    max_detections: int = 10
    mode: str = 'language'

    def validate(self):
        if not 0. <= self.box_jitter < 0.5:
            raise ConfigurationError(f"box_jitter must lie in [0, 0.5), got {self.box_jitter}")
        if not 0. <= self.confidence_mean <= 1.:
            raise ConfigurationError("confidence_mean must lie in [0, 1]")
        if self.confidence_std < 0.:
            raise ConfigurationError("confidence_std must be non-negative")
        if not 1 <= self.max_detections <= 10:
            raise ConfigurationError("max_detections must lie in [1, 10]")
        if self.mode not in ('language', 'all'):
            raise ConfigurationError(f"Detector mode '{self.mode}' is not supported")


def _draw_confidence(noise, rng):
    if noise.confidence_std == 0.:
        return noise.confidence_mean
    mu, sigma = noise.confidence_mean, noise.confidence_std
    a, b = (0. - mu) / sigma, (1. - mu) / sigma
    return float(truncnorm.rvs(a, b, loc=mu, scale=sigma, random_state=rng))


def relevant_objects(scene, mode='language'):
    """Indices of the objects the detector reports for this scene."""
    if mode == 'all':
        return list(range(len(scene.objects)))
    words = scene.expression.attribute_words()
    return [i for i, obj in enumerate(scene.objects)
            if {obj.shape, obj.color, obj.size} & words]


@counted
def oracle_detect(scene, noise, rng):
    """Noisy detections of the expression-relevant objects of a scene.

    :param scene: SceneRecord
    :param noise: DetectorNoiseConfig
    :param rng: numpy.random.Generator
    :return: list of PriorSample, the target's detection labelled positive
    """
    indices = relevant_objects(scene, noise.mode)
    if len(indices) > noise.max_detections:
        warnings.warn(f"Scene {scene.scene_id}: {len(indices)} relevant objects, "
                      f"keeping the first {noise.max_detections}")
        others = [i for i in indices if i != scene.target_index]
        indices = sorted([scene.target_index] + others[:noise.max_detections - 1])
    detections = []
    for i in indices:
        box = perturb(scene.objects[i].box, noise.box_jitter, rng)
        label = SampleLabel.POSITIVE if i == scene.target_index else SampleLabel.NEGATIVE_DETECTED
        detections.append(PriorSample(box, _draw_confidence(noise, rng), label))
    logger.debug("scene %s: %d detections", scene.scene_id, len(detections))
    return detections
