# Defines the query bundles fed to the decoder
#
# Copyright (c) 2026, pcan developers and contributors


from dataclasses import dataclass

import jax
import jax.numpy as jnp

from pcan.Util.exceptions import ShapeError


__all__ = ['QueryBundle', 'init_anchor_logits', 'make_matching_bundle',
           'make_contrastive_bundles', 'contrastive_positions']


@dataclass(frozen=True)
class QueryBundle(object):
    """Content and position queries entering one decoder call.

    :param content: (N, C) content queries
    :param position: (N, 4) center-size normalized anchor boxes
    :param origin: 'matching' or 'contrastive-<g>'
    :param group_size: number of leading rows coming from a contrastive group
    """
    content: jnp.ndarray
    position: jnp.ndarray
    origin: str = 'matching'
    group_size: int = 0

    @property
    def num_queries(self):
        return self.content.shape[0]

    @property
    def is_contrastive(self):
        return self.origin != 'matching'


def init_anchor_logits(key, num_queries, init_range=1.5):
    """Learnable anchors, uniform in inverse-sigmoid space."""
    return jax.random.uniform(key, (num_queries, 4), minval=-init_range, maxval=init_range)


def _content(sentence, num_queries):
    return jnp.broadcast_to(sentence[None, :], (num_queries, sentence.shape[-1]))


def make_matching_bundle(sentence, anchor_logits):
    """Sentence feature repeated as content, learnable anchors as positions."""
    num_queries = anchor_logits.shape[0]
    return QueryBundle(_content(sentence, num_queries), jax.nn.sigmoid(anchor_logits))


def contrastive_positions(group_boxes, anchor_logits):
    """Position queries of every group, shape (G, N, 4).

    :param group_boxes: (G, K, 4) center-size boxes of the contrastive groups
    :param anchor_logits: (N, 4) learnable anchors filling rows K..N-1
    """
    num_groups, group_size = group_boxes.shape[:2]
    num_queries = anchor_logits.shape[0]
    if group_size > num_queries:
        raise ShapeError(f"Contrastive groups of {group_size} boxes do not fit in {num_queries} queries")
    padding = jnp.broadcast_to(jax.nn.sigmoid(anchor_logits)[group_size:],
                               (num_groups, num_queries - group_size, 4))
    return jnp.concatenate([group_boxes.astype(padding.dtype), padding], axis=1)


def make_contrastive_bundles(sentence, group_boxes, anchor_logits):
    """One bundle per contrastive group, sharing their content queries.

    :return: list of G QueryBundle
    """
    positions = contrastive_positions(group_boxes, anchor_logits)
    content = _content(sentence, anchor_logits.shape[0])
    group_size = group_boxes.shape[1]
    return [QueryBundle(content, positions[g], f'contrastive-{g}', group_size)
            for g in range(positions.shape[0])]
