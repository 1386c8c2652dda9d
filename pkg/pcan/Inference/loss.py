# Defines the matching cost, the best-match selection and the full training loss
#
# Copyright (c) 2026, pcan developers and contributors


from dataclasses import dataclass
from functools import partial
from typing import NamedTuple

import jax
import jax.numpy as jnp
from jax import jit, lax

from pcan.Inference.loss_terms import (l1_box_loss, giou_loss, dice_loss, mask_focal,
                                       cls_focal, contrastive_alignment)
from pcan.Util.exceptions import ConfigurationError, ShapeError, TrainingAbortError
from pcan.Util.jax_util import is_concrete


__all__ = ['LossWeights', 'MatchResult', 'SceneBatch', 'COST_TERMS', 'matching_cost',
           'query_costs', 'select_best', 'best_match', 'total_loss', 'check_finite',
           'SceneLoss']


COST_TERMS = ('l1', 'giou', 'dice', 'mask_focal', 'cls_focal')


@dataclass(frozen=True)
class LossWeights(object):
    """
    :param contrastive_supervision: supervise the positive row of every
     contrastive group with the matching cost
    :param include_padded_queries: let the rows that pad a contrastive group up
     to N queries enter the alignment denominator
    :param stop_gradient_matched: stop the alignment gradient at the matched
     query embedding
    """
    giou: float = 2.
    l1: float = 5.
    dice: float = 5.
    focal: float = 2.
    cls: float = 2.
    alpha_total: float = 1.
    beta_total: float = 1.
    tau: float = 0.2
    focal_gamma: float = 2.
    focal_alpha: float = 0.25
    dice_eps: float = 1.
    contrastive_supervision: bool = True
    include_padded_queries: bool = False
    stop_gradient_matched: bool = False

    def validate(self):
        for name in ('giou', 'l1', 'dice', 'focal', 'cls', 'alpha_total', 'beta_total',
                     'focal_gamma', 'dice_eps'):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"Loss weight '{name}' must be non-negative")
        if not self.tau > 0:
            raise ConfigurationError("The temperature tau must be positive")
        if not 0. <= self.focal_alpha <= 1.:
            raise ConfigurationError("focal_alpha must lie in [0, 1]")


class MatchResult(NamedTuple):
    index: jnp.ndarray    # best query
    costs: jnp.ndarray    # (N,) total matching cost of every query
    breakdown: dict       # weighted cost terms at the best query


class SceneBatch(NamedTuple):
    images: jnp.ndarray          # (B, H, W, 3)
    tokens: jnp.ndarray          # (B, L)
    gt_boxes: jnp.ndarray        # (B, 4) center-size
    gt_masks: jnp.ndarray        # (B, H/8, W/8)
    group_boxes: jnp.ndarray     # (B, G, K, 4) center-size
    positive_index: jnp.ndarray  # (B, G)


def matching_cost(box, mask_logits, class_logit, gt_box, gt_mask, w):
    """Weighted matching cost of one prediction against the ground truth.

    :return: (total, breakdown) where breakdown maps every name of COST_TERMS
     to its weighted value
    """
    if mask_logits.shape != gt_mask.shape:
        raise ShapeError(f"Mask logits {mask_logits.shape} and ground truth {gt_mask.shape} differ")
    breakdown = {
        'l1': w.l1 * l1_box_loss(box, gt_box),
        'giou': w.giou * giou_loss(box, gt_box),
        'dice': w.dice * dice_loss(mask_logits, gt_mask, w.dice_eps),
        'mask_focal': w.focal * mask_focal(mask_logits, gt_mask, w.focal_gamma, w.focal_alpha),
        'cls_focal': w.cls * cls_focal(class_logit, 1., w.focal_gamma, w.focal_alpha),
    }
    return sum(breakdown[k] for k in COST_TERMS), breakdown


def query_costs(preds, gt_box, gt_mask, w):
    """Matching cost and breakdown of every query, shapes (N,) and dict of (N,)."""
    def cost(box, mask_logits, class_logit):
        return matching_cost(box, mask_logits, class_logit, gt_box, gt_mask, w)
    return jax.vmap(cost)(preds.boxes, preds.mask_logits, preds.class_logits)


def select_best(costs):
    """Index of the smallest cost; the lowest index wins ties."""
    return jnp.argmin(lax.stop_gradient(costs))


def best_match(preds, gt_box, gt_mask, w):
    """Query minimizing the matching cost against the single ground truth.

    :return: MatchResult
    """
    costs, breakdown = query_costs(preds, gt_box, gt_mask, w)
    index = select_best(costs)
    return MatchResult(index, costs, {k: v[index] for k, v in breakdown.items()})


def check_finite(components):
    """Raise TrainingAbortError naming the first non-finite component."""
    for name, value in components.items():
        if is_concrete(value) and not bool(jnp.all(jnp.isfinite(jnp.asarray(value)))):
            raise TrainingAbortError(f"Loss component '{name}' is not finite ({value})", component=name)


def total_loss(matching_terms, l_ca, w):
    """alpha_total * L_M + beta_total * L_CA.

    :param matching_terms: L_M as a scalar, or a mapping of its named terms
    :param l_ca: contrastive alignment loss
    """
    if isinstance(matching_terms, dict):
        components = dict(matching_terms)
        l_m = sum(matching_terms.values())
    else:
        components = {'l_m': matching_terms}
        l_m = matching_terms
    components['l_ca'] = l_ca
    check_finite(components)
    return w.alpha_total * l_m + w.beta_total * l_ca


class SceneLoss(object):
    """Training objective of a batch of scenes.

    :param model: PCANModel
    :param weights: LossWeights
    :param use_clum: run the contrastive decoder path
    :param use_contrastive_loss: add the alignment loss (requires use_clum)
    """

    def __init__(self, model, weights, use_clum=True, use_contrastive_loss=True):
        self._model = model
        self._w = weights
        self._use_clum = use_clum
        self._use_cl = use_clum and use_contrastive_loss

    def _unmatched_cls(self, class_logits, keep):
        """lambda_cls * sum of label-0 focal terms over the rows where keep is True."""
        w = self._w
        per_query = jax.vmap(lambda z: cls_focal(z, 0., w.focal_gamma, w.focal_alpha))(class_logits)
        return w.cls * jnp.sum(jnp.where(keep, per_query, 0.))

    def _group_supervision(self, contrastive, gt_box, gt_mask, positive_index, group_size):
        w = self._w
        num_queries = contrastive.class_logits.shape[1]
        rows = jnp.arange(num_queries)

        def one_group(preds, pos):
            total, _ = matching_cost(preds.boxes[pos], preds.mask_logits[pos], preds.class_logits[pos],
                                     gt_box, gt_mask, w)
            keep = (rows != pos) & (rows < group_size)
            return total + self._unmatched_cls(preds.class_logits, keep)

        return jnp.mean(jax.vmap(one_group)(contrastive, positive_index))

    def scene(self, params, image, tokens, gt_box, gt_mask, group_boxes, positive_index):
        """Loss of one scene: (total, aux breakdown)."""
        w = self._w
        if self._use_clum:
            matching, contrastive = self._model.predict_train(params, image, tokens, group_boxes)
        else:
            matching, contrastive = self._model.predict(params, image, tokens), None
        match = best_match(matching, gt_box, gt_mask, w)
        num_queries = matching.class_logits.shape[0]
        unmatched = self._unmatched_cls(matching.class_logits, jnp.arange(num_queries) != match.index)
        zero = jnp.zeros((), dtype=unmatched.dtype)
        supervision = zero
        if self._use_clum and w.contrastive_supervision:
            supervision = self._group_supervision(contrastive, gt_box, gt_mask, positive_index,
                                                  group_boxes.shape[1])
        l_ca = zero
        if self._use_cl:
            y_p = matching.embeddings[match.index]
            if w.stop_gradient_matched:
                y_p = lax.stop_gradient(y_p)
            valid = None
            if not w.include_padded_queries:
                rows = jnp.arange(contrastive.embeddings.shape[1]) < group_boxes.shape[1]
                valid = jnp.broadcast_to(rows, contrastive.embeddings.shape[:2])
            l_ca = contrastive_alignment(y_p, contrastive.embeddings, positive_index, w.tau, valid=valid)
        terms = dict(match.breakdown)
        terms['unmatched_cls'] = unmatched
        terms['contrastive_supervision'] = supervision
        l_m = sum(terms.values())
        total = total_loss(l_m, l_ca, w)
        aux = dict(terms, l_m=l_m, l_ca=l_ca, total=total, index=match.index)
        return total, aux

    def __call__(self, params, batch):
        """Mean loss over a SceneBatch and the per-scene breakdowns."""
        totals, aux = jax.vmap(self.scene, in_axes=(None, 0, 0, 0, 0, 0, 0))(params, *batch)
        return jnp.mean(totals), aux

    @partial(jit, static_argnums=(0,))
    def value_and_grad(self, params, batch):
        """((loss, aux), gradients) of a batch."""
        return jax.value_and_grad(self.__call__, has_aux=True)(params, batch)
