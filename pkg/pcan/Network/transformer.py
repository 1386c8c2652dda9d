# Defines the multi-scale encoder and the anchor-box query decoder
#
# Copyright (c) 2026, pcan developers and contributors


from typing import NamedTuple

import jax
import jax.numpy as jnp
from jax import lax

from pcan.Network.layers import (attention_init, multi_head_attention, ffn_init, ffn,
                                 self_attention_layer_init, self_attention_layer)
from pcan.Util.jax_util import (layer_norm_init, layer_norm, mlp_init, mlp,
                                sine_encoding_2d, sine_encoding_coords)
from pcan.Util.util import inverse_sigmoid


__all__ = ['Memory', 'DecoderOutput', 'TransformerEncoder', 'TransformerDecoder',
           'box_head_init', 'refine_boxes']


class Memory(NamedTuple):
    features: jnp.ndarray   # (F, C)
    positions: jnp.ndarray  # (F, C), the encodings added to the input rows
    level_shapes: tuple     # ((H_i, W_i), ...) static


class DecoderOutput(NamedTuple):
    queries: jnp.ndarray     # (N, C) output queries
    references: jnp.ndarray  # (L, N, 4) anchor fed to every layer, center-size
    boxes: jnp.ndarray       # (L, N, 4) anchor refined by every layer


def box_head_init(key, dim):
    """3-layer box MLP shared by all decoder layers and the final box head."""
    params = mlp_init(key, (dim, dim, dim, 4))
    params[-1] = {'w': jnp.zeros_like(params[-1]['w']), 'b': jnp.zeros_like(params[-1]['b'])}
    return params


def refine_boxes(box_params, queries, anchors):
    """Add the box MLP output to the anchors in inverse-sigmoid space."""
    return jax.nn.sigmoid(mlp(box_params, queries) + inverse_sigmoid(anchors))


class TransformerEncoder(object):
    """Self-attention over the flattened, position-encoded pyramid levels."""

    def __init__(self, hidden_dim, num_layers=4, num_heads=4, ffn_ratio=4):
        self._dim = hidden_dim
        self._num_layers = num_layers
        self._heads = num_heads
        self._ffn_ratio = ffn_ratio

    def init_params(self, key):
        keys = jax.random.split(key, self._num_layers)
        return {'layers': [self_attention_layer_init(k, self._dim, self._ffn_ratio) for k in keys]}

    def flatten(self, pyramid):
        """Flattened levels and their 2-D sine encodings, both (F, C)."""
        rows, positions, shapes = [], [], []
        for level in pyramid:
            h, w, c = level.shape
            rows.append(level.reshape(h * w, c))
            positions.append(sine_encoding_2d(h, w, c).astype(level.dtype))
            shapes.append((h, w))
        return jnp.concatenate(rows), jnp.concatenate(positions), tuple(shapes)

    def encode_rows(self, params, rows):
        for layer in params['layers']:
            rows = self_attention_layer(layer, rows, self._heads)
        return rows

    def __call__(self, params, pyramid):
        rows, positions, shapes = self.flatten(pyramid)
        return Memory(self.encode_rows(params, rows + positions), positions, shapes)


class TransformerDecoder(object):
    """Decoder whose query positions are 4-D anchor boxes refined layer by layer.

    The same instance and parameters serve the matching queries and every
    contrastive group.
    """

    def __init__(self, hidden_dim, num_layers=4, num_heads=4, ffn_ratio=4, refine_anchors=True):
        if hidden_dim % 8 != 0:
            raise ValueError(f"hidden_dim must be a multiple of 8, got {hidden_dim}")
        self._dim = hidden_dim
        self._num_layers = num_layers
        self._heads = num_heads
        self._ffn_ratio = ffn_ratio
        self.refine_anchors = refine_anchors

    @property
    def num_layers(self):
        return self._num_layers

    def init_params(self, key):
        keys = jax.random.split(key, self._num_layers + 1)
        layers = []
        for k in keys[:-1]:
            ks, kc, kf = jax.random.split(k, 3)
            layers.append({'norm_self': layer_norm_init(self._dim), 'self_attn': attention_init(ks, self._dim),
                           'norm_cross': layer_norm_init(self._dim), 'cross_attn': attention_init(kc, self._dim),
                           'norm_ffn': layer_norm_init(self._dim),
                           'ffn': ffn_init(kf, self._dim, self._ffn_ratio * self._dim)})
        # the 4 anchor coordinates take C/2 channels each
        return {'layers': layers,
                'query_pos': mlp_init(keys[-1], (2 * self._dim, self._dim, self._dim)),
                'norm_out': layer_norm_init(self._dim)}

    def query_position(self, params, anchors):
        return mlp(params['query_pos'], sine_encoding_coords(anchors, self._dim // 2))

    def _layer(self, params, tgt, query_pos, memory):
        h = layer_norm(params['norm_self'], tgt)
        tgt = tgt + multi_head_attention(params['self_attn'], h + query_pos, h + query_pos, h, self._heads)
        h = layer_norm(params['norm_cross'], tgt)
        tgt = tgt + multi_head_attention(params['cross_attn'], h + query_pos,
                                         memory.features + memory.positions, memory.features, self._heads)
        return tgt + ffn(params['ffn'], layer_norm(params['norm_ffn'], tgt))

    def __call__(self, params, box_params, memory, content, anchors):
        """
        :param params: decoder parameters
        :param box_params: shared box MLP parameters
        :param memory: Memory from the encoder
        :param content: (N, C) content queries
        :param anchors: (N, 4) center-size normalized position queries
        :return: DecoderOutput
        """
        tgt = content
        references, boxes = [], []
        for layer in params['layers']:
            tgt = self._layer(layer, tgt, self.query_position(params, anchors), memory)
            refined = refine_boxes(box_params, layer_norm(params['norm_out'], tgt), anchors)
            references.append(anchors)
            boxes.append(refined)
            if self.refine_anchors:
                anchors = lax.stop_gradient(refined)
        return DecoderOutput(layer_norm(params['norm_out'], tgt),
                             jnp.stack(references), jnp.stack(boxes))
