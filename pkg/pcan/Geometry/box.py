# Defines the Box type and its exact arithmetic
#
# Copyright (c) 2026, pcan developers and contributors


import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from pcan.Geometry import box_ops
from pcan.Util.exceptions import ConfigurationError, ConventionMismatchError, InvalidBoxError


__all__ = ['BoxConvention', 'Box', 'iou', 'giou', 'perturb']


_RANGE_TOLERANCE = 1e-9


class BoxConvention(str, Enum):
    CORNER_ABSOLUTE = 'corner-absolute'
    CORNER_NORMALIZED = 'corner-normalized'
    CENTER_SIZE_NORMALIZED = 'center-size-normalized'

    @property
    def normalized(self):
        return self is not BoxConvention.CORNER_ABSOLUTE


@dataclass(frozen=True)
class Box(object):
    """Axis-aligned rectangle tagged with its coordinate convention.

    In corner conventions the fields are (x1, y1, x2, y2); in the
    center-size convention the same four slots hold (cx, cy, w, h).
    Degenerate boxes are rejected at construction.
    """
    x1: float
    y1: float
    x2: float
    y2: float
    convention: BoxConvention = BoxConvention.CORNER_NORMALIZED

    def __post_init__(self):
        coords = tuple(float(v) for v in (self.x1, self.y1, self.x2, self.y2))
        for name, value in zip(('x1', 'y1', 'x2', 'y2'), coords):
            object.__setattr__(self, name, value)
        object.__setattr__(self, 'convention', BoxConvention(self.convention))
        if not all(math.isfinite(v) for v in coords):
            raise InvalidBoxError(f"Box coordinates must be finite, got {coords}")
        if self.convention is BoxConvention.CENTER_SIZE_NORMALIZED:
            if not (coords[2] > 0 and coords[3] > 0):
                raise InvalidBoxError(f"Box width and height must be positive, got {coords}")
        elif not (coords[0] < coords[2] and coords[1] < coords[3]):
            raise InvalidBoxError(f"Box must satisfy x1 < x2 and y1 < y2, got {coords}")
        if self.convention.normalized:
            lo, hi = -_RANGE_TOLERANCE, 1. + _RANGE_TOLERANCE
            if not all(lo <= v <= hi for v in coords):
                raise InvalidBoxError(f"Normalized box coordinates must lie in [0, 1], got {coords}")

    @classmethod
    def from_array(cls, array, convention=BoxConvention.CORNER_NORMALIZED):
        x1, y1, x2, y2 = (float(v) for v in np.asarray(array).reshape(4))
        return cls(x1, y1, x2, y2, convention)

    def as_array(self):
        return np.array([self.x1, self.y1, self.x2, self.y2], dtype=np.float64)

    def corners(self):
        """(x1, y1, x2, y2) in the units of the box (pixels or normalized)."""
        if self.convention is BoxConvention.CENTER_SIZE_NORMALIZED:
            cx, cy, w, h = self.x1, self.y1, self.x2, self.y2
            return (cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h)
        return (self.x1, self.y1, self.x2, self.y2)

    @property
    def width(self):
        x1, _, x2, _ = self.corners()
        return x2 - x1

    @property
    def height(self):
        _, y1, _, y2 = self.corners()
        return y2 - y1

    @property
    def area(self):
        return self.width * self.height

    @property
    def center(self):
        x1, y1, x2, y2 = self.corners()
        return 0.5 * (x1 + x2), 0.5 * (y1 + y2)

    def to(self, convention, image_hw=None):
        """Convert to another convention.

        :param convention: target BoxConvention (or its string value)
        :param image_hw: (H, W) image size, required when converting from or
         to absolute pixel coordinates
        :return: new Box
        """
        convention = BoxConvention(convention)
        if convention is self.convention:
            return self
        x1, y1, x2, y2 = self.corners()
        if self.convention is BoxConvention.CORNER_ABSOLUTE or convention is BoxConvention.CORNER_ABSOLUTE:
            if image_hw is None:
                raise InvalidBoxError("Converting to or from absolute coordinates requires image_hw")
            height, width = image_hw
            if self.convention is BoxConvention.CORNER_ABSOLUTE:
                x1, x2 = x1 / width, x2 / width
                y1, y2 = y1 / height, y2 / height
            else:
                return Box(x1 * width, y1 * height, x2 * width, y2 * height,
                           BoxConvention.CORNER_ABSOLUTE)
        if convention is BoxConvention.CENTER_SIZE_NORMALIZED:
            return Box(0.5 * (x1 + x2), 0.5 * (y1 + y2), x2 - x1, y2 - y1, convention)
        return Box(x1, y1, x2, y2, convention)


def _check_pair(a, b):
    if not (isinstance(a, Box) and isinstance(b, Box)):
        raise InvalidBoxError("iou/giou expect two Box instances")
    if a.convention is not b.convention:
        raise ConventionMismatchError(f"Cannot compare a '{a.convention.value}' box "
                                      f"with a '{b.convention.value}' box")


def iou(a, b):
    """Intersection over union of two boxes sharing a convention.

    :return: float in [0, 1], 0 for disjoint boxes
    """
    _check_pair(a, b)
    value = box_ops.elementwise_iou(np.array(a.corners()), np.array(b.corners()), xp=np)
    return float(value)


def giou(a, b):
    """Generalized IoU of two boxes sharing a convention, in (-1, 1]."""
    _check_pair(a, b)
    value = box_ops.elementwise_giou(np.array(a.corners()), np.array(b.corners()), xp=np)
    return float(value)


def perturb(box, scale, rng):
    """Jitter every corner coordinate by uniform noise relative to the box side.

    :param box: normalized Box (either normalized convention)
    :param scale: noise magnitude in [0, 0.5) as a fraction of the side length
    :param rng: numpy.random.Generator
    :return: valid Box of the same convention, clipped to [0, 1]
    """
    if not 0. <= scale < 0.5:
        raise ConfigurationError(f"perturbation scale must lie in [0, 0.5), got {scale}")
    if not box.convention.normalized:
        raise InvalidBoxError("perturb expects a normalized box")
    corners = np.array(box.corners())
    sides = np.array([box.width, box.height, box.width, box.height])
    noise = rng.uniform(-1., 1., size=4) * scale * sides
    # a shift below half a side per coordinate keeps x1 < x2 and y1 < y2
    x1, y1, x2, y2 = np.clip(corners + noise, 0., 1.)
    return Box(x1, y1, x2, y2, BoxConvention.CORNER_NORMALIZED).to(box.convention)
