# Vectorised axis-aligned box arithmetic
#
# Copyright (c) 2026, pcan developers and contributors

"""Box kernels operating on the last axis of arrays of shape (..., 4).

Every function takes an optional array namespace `xp` so that the same code
serves the differentiable model (`jax.numpy`, the default) and the exact
float64 bookkeeping of the data side (`numpy`).
"""

import jax.numpy as jnp


__all__ = ['box_cxcywh_to_xyxy', 'box_xyxy_to_cxcywh', 'box_area',
           'elementwise_iou', 'elementwise_giou', 'pairwise_iou']


def _unstack(boxes):
    return boxes[..., 0], boxes[..., 1], boxes[..., 2], boxes[..., 3]


def box_cxcywh_to_xyxy(boxes, xp=jnp):
    cx, cy, w, h = _unstack(boxes)
    return xp.stack([cx - 0.5 * w, cy - 0.5 * h,
                     cx + 0.5 * w, cy + 0.5 * h], axis=-1)


def box_xyxy_to_cxcywh(boxes, xp=jnp):
    x1, y1, x2, y2 = _unstack(boxes)
    return xp.stack([0.5 * (x1 + x2), 0.5 * (y1 + y2),
                     x2 - x1, y2 - y1], axis=-1)


def box_area(boxes, xp=jnp):
    x1, y1, x2, y2 = _unstack(boxes)
    return (x2 - x1) * (y2 - y1)


def _intersection_union_hull(a, b, xp):
    ax1, ay1, ax2, ay2 = _unstack(a)
    bx1, by1, bx2, by2 = _unstack(b)
    inter_w = xp.maximum(xp.minimum(ax2, bx2) - xp.maximum(ax1, bx1), 0.)
    inter_h = xp.maximum(xp.minimum(ay2, by2) - xp.maximum(ay1, by1), 0.)
    intersection = inter_w * inter_h
    union = box_area(a, xp=xp) + box_area(b, xp=xp) - intersection
    hull = ((xp.maximum(ax2, bx2) - xp.minimum(ax1, bx1)) *
            (xp.maximum(ay2, by2) - xp.minimum(ay1, by1)))
    return intersection, union, hull


def elementwise_iou(a, b, xp=jnp):
    """IoU of corner-form boxes a[i] and b[i] (broadcasting on leading axes).

    Boxes are assumed valid (positive area), so the union never vanishes.
    """
    intersection, union, _ = _intersection_union_hull(a, b, xp)
    return intersection / union


def elementwise_giou(a, b, xp=jnp):
    """Generalized IoU: IoU - (hull - union) / hull, corner-form boxes."""
    intersection, union, hull = _intersection_union_hull(a, b, xp)
    return intersection / union - (hull - union) / hull


def pairwise_iou(a, b, xp=jnp):
    """IoU matrix of shape (N, M) between corner boxes a (N, 4) and b (M, 4)."""
    return elementwise_iou(a[:, None, :], b[None, :, :], xp=xp)
