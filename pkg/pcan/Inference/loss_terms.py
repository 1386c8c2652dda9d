# Defines the individual differentiable loss terms
#
# Copyright (c) 2026, pcan developers and contributors


import jax
import jax.numpy as jnp
import optax
from jax.scipy.special import logsumexp

from pcan.Geometry import box_ops
from pcan.Util.exceptions import ShapeError


__all__ = ['l1_box_loss', 'giou_loss', 'dice_loss', 'sigmoid_focal',
           'mask_focal', 'cls_focal', 'contrastive_alignment']


def _check_same_shape(a, b, what):
    if jnp.shape(a) != jnp.shape(b):
        raise ShapeError(f"{what}: shapes {jnp.shape(a)} and {jnp.shape(b)} differ")


def l1_box_loss(pred_box, gt_box):
    """Sum of absolute differences of the 4 center-size coordinates."""
    _check_same_shape(pred_box, gt_box, "l1_box_loss")
    return jnp.sum(jnp.abs(pred_box - gt_box), axis=-1)


def giou_loss(pred_box, gt_box):
    """1 - GIoU of center-size boxes."""
    _check_same_shape(pred_box, gt_box, "giou_loss")
    return 1. - box_ops.elementwise_giou(box_ops.box_cxcywh_to_xyxy(pred_box),
                                         box_ops.box_cxcywh_to_xyxy(gt_box))


def dice_loss(logits, gt_mask, eps=1.):
    """1 - (2 sum(p g) + eps) / (sum(p) + sum(g) + eps), p = sigmoid(logits)."""
    _check_same_shape(logits, gt_mask, "dice_loss")
    p = jax.nn.sigmoid(logits)
    return 1. - (2. * jnp.sum(p * gt_mask) + eps) / (jnp.sum(p) + jnp.sum(gt_mask) + eps)


def sigmoid_focal(logits, targets, gamma=2., alpha=0.25):
    """Element-wise binary focal loss on logits."""
    p = jax.nn.sigmoid(logits)
    ce = optax.sigmoid_binary_cross_entropy(logits, targets)
    p_t = p * targets + (1. - p) * (1. - targets)
    alpha_t = alpha * targets + (1. - alpha) * (1. - targets)
    return alpha_t * ce * (1. - p_t) ** gamma


def mask_focal(logits, gt_mask, gamma=2., alpha=0.25):
    """Pixel-averaged focal loss of a mask."""
    _check_same_shape(logits, gt_mask, "mask_focal")
    return jnp.mean(sigmoid_focal(logits, gt_mask, gamma, alpha))


def cls_focal(logit, label, gamma=2., alpha=0.25):
    """Focal loss of referent-ness logits, averaged over the given entries."""
    return jnp.mean(sigmoid_focal(logit, jnp.asarray(label, dtype=jnp.result_type(logit)), gamma, alpha))


def contrastive_alignment(y_p, group_embeddings, positive_index, tau=0.2, valid=None):
    """Temperature-scaled alignment of one embedding with G groups of candidates.

    Per group g the term is -log softmax(y_p . q_g / tau)[p_g]; the loss is
    the mean over groups.

    :param y_p: (D,) embedding of the matched query
    :param group_embeddings: (G, N_g, D) embeddings of the contrastive queries
    :param positive_index: (G,) index of the positive sample in every group
    :param tau: temperature
    :param valid: optional (G, N_g) boolean, False rows leave the denominator
    :return: scalar loss
    """
    if group_embeddings.ndim != 3 or group_embeddings.shape[1] == 0:
        raise ShapeError(f"Expected non-empty groups of shape (G, N_g, D), got {group_embeddings.shape}")
    if y_p.shape[-1] != group_embeddings.shape[-1]:
        raise ShapeError("Embedding dimensions differ")
    logits = group_embeddings @ y_p / tau
    weights = jnp.ones_like(logits) if valid is None else jnp.asarray(valid, dtype=logits.dtype)
    log_norm = logsumexp(logits, axis=-1, b=weights)
    positive = jnp.take_along_axis(logits, jnp.asarray(positive_index)[:, None], axis=-1)[:, 0]
    return jnp.mean(log_norm - positive)
