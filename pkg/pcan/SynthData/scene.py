# Defines the synthetic scene records and their generator
#
# Copyright (c) 2026, pcan developers and contributors


import logging
from dataclasses import dataclass, field, replace
from typing import Tuple

import numpy as np
from tqdm import tqdm

from pcan.Geometry.box import Box, BoxConvention
from pcan.SynthData import grammar
from pcan.SynthData.detector import DetectorNoiseConfig, oracle_detect
from pcan.Util import image_util
from pcan.Util.exceptions import ConfigurationError, GenerationError
from pcan.Util.util import seeded_rng


__all__ = ['SceneConfig', 'SceneObject', 'SceneRecord', 'render_mask',
           'generate_scene', 'generate_dataset']


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SceneConfig(object):
    """Parameters of the synthetic scene distribution.

    :param height, width: image size in pixels
    :param min_objects, max_objects: number of objects per scene (2 to 6)
    :param colors, shapes, sizes: attribute values the generator may use
    :param small_range, large_range: inclusive pixel side ranges of each size
    :param pixel_noise: standard deviation of the additive Gaussian image noise
    :param relational_fraction: probability to prefer a relational expression
     when one identifies the target
    :param val_fraction: fraction of scenes tagged as validation
    :param max_resample: attempts per scene before giving up
    """
    height: int = 64
    width: int = 64
    min_objects: int = 2
    max_objects: int = 6
    colors: Tuple[str, ...] = tuple(grammar.PALETTE)
    shapes: Tuple[str, ...] = grammar.SHAPES
    sizes: Tuple[str, ...] = grammar.SIZES
    small_range: Tuple[int, int] = (7, 11)
    large_range: Tuple[int, int] = (14, 20)
    pixel_noise: float = 0.02
    relational_fraction: float = 0.5
    val_fraction: float = 0.2
    max_resample: int = 100

    def __post_init__(self):
        for name in ('colors', 'shapes', 'sizes', 'small_range', 'large_range'):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    def validate(self):
        if not 2 <= self.min_objects <= self.max_objects <= 6:
            raise ConfigurationError("Scenes hold between 2 and 6 objects "
                                     f"(got min={self.min_objects}, max={self.max_objects})")
        if self.height % 32 != 0 or self.width % 32 != 0:
            raise ConfigurationError("Image height and width must be multiples of 32")
        for name, allowed in (('colors', grammar.PALETTE), ('shapes', grammar.SHAPES),
                              ('sizes', grammar.SIZES)):
            values = getattr(self, name)
            if not values or any(v not in allowed for v in values):
                raise ConfigurationError(f"Invalid {name}: {values}")
        largest = max(self.large_range[1], self.small_range[1])
        if min(self.small_range[0], self.large_range[0]) < 3 or largest > min(self.height, self.width):
            raise ConfigurationError("Object sides must lie between 3 pixels and the image size")
        if not 0. <= self.val_fraction < 1.:
            raise ConfigurationError("val_fraction must lie in [0, 1)")


@dataclass(frozen=True)
class SceneObject(object):
    shape: str
    color: str
    size: str
    box: Box
    mask: np.ndarray = field(repr=False, compare=False)


@dataclass(frozen=True)
class SceneRecord(object):
    """One synthetic image with its referring expression and ground truth."""
    scene_id: int
    split: str
    image: np.ndarray = field(repr=False, compare=False)
    objects: Tuple[SceneObject, ...]
    expression: grammar.Expression
    tokens: Tuple[int, ...]
    target_index: int
    detections: tuple = ()
    all_detections: tuple = ()

    @property
    def height(self):
        return self.image.shape[0]

    @property
    def width(self):
        return self.image.shape[1]

    @property
    def target(self):
        return self.objects[self.target_index]

    @property
    def target_box(self):
        return self.target.box

    @property
    def target_mask(self):
        return self.target.mask

    @property
    def expression_length(self):
        return len(self.tokens)

    def mask_at_stride(self, stride=8):
        """Target mask downsampled by block averaging, binarized at half coverage."""
        coverage = image_util.re_size(self.target_mask.astype(np.float64), stride)
        return (coverage >= 0.5).astype(np.float32)

    def padded_tokens(self, length=grammar.MAX_TOKENS):
        tokens = np.full(length, grammar.PAD_ID, dtype=np.int32)
        tokens[:len(self.tokens)] = self.tokens
        return tokens


def render_mask(shape, x0, y0, side, height, width):
    """Binary mask of a shape drawn inside the pixel box [x0, x0+side) x [y0, y0+side)."""
    mask = np.zeros((height, width), dtype=bool)
    py, px = np.mgrid[y0:y0 + side, x0:x0 + side] + 0.5
    cx, cy, half = x0 + 0.5 * side, y0 + 0.5 * side, 0.5 * side
    if shape == 'square':
        inside = np.ones_like(px, dtype=bool)
    elif shape == 'circle':
        inside = (px - cx) ** 2 + (py - cy) ** 2 <= half ** 2
    elif shape == 'triangle':
        # apex at the top centre, base along the bottom edge
        inside = np.abs(px - cx) <= half * (py - y0) / side
    else:
        raise ValueError(f"Unknown shape '{shape}'")
    mask[y0:y0 + side, x0:x0 + side] = inside
    return mask


def _draw_attributes(config, rng, n_objects):
    def pick(values):
        return values[rng.integers(len(values))]
    target = [pick(config.shapes), pick(config.colors), pick(config.sizes)]
    attributes = [target]
    # the first distractor shares the shape or the color of the target
    twin = [pick(config.shapes), pick(config.colors), pick(config.sizes)]
    shared = rng.integers(2)
    twin[shared] = target[shared]
    attributes.append(twin)
    for _ in range(n_objects - 2):
        attributes.append([pick(config.shapes), pick(config.colors), pick(config.sizes)])
    return attributes


def _place(config, rng, sides, max_tries=200):
    placed = []
    for side in sides:
        for _ in range(max_tries):
            x0 = int(rng.integers(0, config.width - side + 1))
            y0 = int(rng.integers(0, config.height - side + 1))
            if all(x0 + side <= ox or ox + os <= x0 or y0 + side <= oy or oy + os <= y0
                   for ox, oy, os in placed):
                placed.append((x0, y0, side))
                break
        else:
            return None
    return placed


def _try_scene(config, rng):
    n_objects = int(rng.integers(config.min_objects, config.max_objects + 1))
    attributes = _draw_attributes(config, rng, n_objects)
    sides = [int(rng.integers(*(config.small_range if size == 'small' else config.large_range), endpoint=True))
             for _, _, size in attributes]
    placement = _place(config, rng, sides)
    if placement is None:
        return None
    objects = []
    for (shape, color, size), (x0, y0, side) in zip(attributes, placement):
        box = Box(x0, y0, x0 + side, y0 + side, BoxConvention.CORNER_ABSOLUTE)
        mask = render_mask(shape, x0, y0, side, config.height, config.width)
        objects.append(SceneObject(shape, color, size,
                                   box.to(BoxConvention.CORNER_NORMALIZED, (config.height, config.width)),
                                   mask))
    order = rng.permutation(n_objects)
    objects = [objects[i] for i in order]
    target_index = int(np.argmin(order))  # the target was drawn first
    plain, relational = grammar.candidate_expressions(objects, target_index)
    if not plain and not relational:
        return None
    if relational and (not plain or rng.random() < config.relational_fraction):
        expression = relational[rng.integers(len(relational))]
    else:
        expression = plain[rng.integers(len(plain))]
    return objects, expression, target_index


def _render_image(config, objects, rng):
    image = np.full((config.height, config.width, 3), 0.1)
    for obj in objects:
        image[obj.mask] = grammar.PALETTE[obj.color]
    if config.pixel_noise > 0:
        image = image + config.pixel_noise * rng.standard_normal(image.shape)
    return np.clip(image, 0., 1.).astype(np.float32)


def generate_scene(scene_id, config, rng, split='train'):
    """Draw one scene whose expression identifies exactly one object.

    :raises GenerationError: when `config.max_resample` attempts fail
    """
    for _ in range(config.max_resample):
        attempt = _try_scene(config, rng)
        if attempt is None:
            continue
        objects, expression, target_index = attempt
        if grammar.evaluate(expression, objects) != [target_index]:
            continue
        image = _render_image(config, objects, rng)
        return SceneRecord(scene_id=scene_id, split=split, image=image,
                           objects=tuple(objects), expression=expression,
                           tokens=tuple(grammar.encode(expression.words())),
                           target_index=target_index)
    raise GenerationError(f"Scene {scene_id}: no uniquely referable scene after "
                          f"{config.max_resample} attempts; the configured attributes "
                          "are too few to tell objects apart")


def generate_dataset(n_scenes, seed, config=None, noise=None, progress_bar=False):
    """Deterministic synthetic dataset, detections included.

    Each scene draws from its own stream derived from (seed, scene_id), so the
    output does not depend on the order in which scenes are produced.

    :param n_scenes: number of scenes, at least 1
    :param seed: dataset seed
    :param config: SceneConfig
    :param noise: DetectorNoiseConfig of the oracle detector
    :return: list of SceneRecord, the last `val_fraction` tagged 'val'
    """
    if n_scenes < 1:
        raise ValueError(f"n_scenes must be at least 1, got {n_scenes}")
    config = SceneConfig() if config is None else config
    noise = DetectorNoiseConfig() if noise is None else noise
    config.validate()
    noise.validate()
    n_train = n_scenes - int(round(n_scenes * config.val_fraction))
    iterable = range(n_scenes)
    if progress_bar is True:
        iterable = tqdm(iterable, total=n_scenes, desc="synth.generate")
    records = []
    for idx in iterable:
        split = 'train' if idx < n_train else 'val'
        scene = generate_scene(idx, config, seeded_rng(seed, idx, 0), split=split)
        detections = oracle_detect(scene, noise, seeded_rng(seed, idx, 1))
        all_detections = oracle_detect(scene, replace(noise, mode='all'), seeded_rng(seed, idx, 2))
        records.append(replace(scene, detections=tuple(detections),
                               all_detections=tuple(all_detections)))
    logger.info("generated %d scenes (%d train, %d val) with seed %d",
                n_scenes, n_train, n_scenes - n_train, seed)
    return records
