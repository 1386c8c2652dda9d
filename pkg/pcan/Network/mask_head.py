# Defines the FPN fusion, the dynamic-convolution mask head and the query heads
#
# Copyright (c) 2026, pcan developers and contributors


from typing import NamedTuple

import jax
import jax.numpy as jnp

from pcan.Network.transformer import refine_boxes
from pcan.Util.exceptions import ShapeError
from pcan.Util.image_util import upsample_nearest
from pcan.Util.jax_util import conv_init, conv2d, dense_init, dense, mlp_init, mlp


__all__ = ['PredictionSet', 'MaskHead', 'dynamic_conv']


_EMBED_EPS = 1e-12


class PredictionSet(NamedTuple):
    boxes: jnp.ndarray          # (N, 4) center-size normalized
    mask_logits: jnp.ndarray    # (N, H/8, W/8)
    class_logits: jnp.ndarray   # (N,)
    embeddings: jnp.ndarray     # (N, D)


def dynamic_conv(params_vector, fused):
    """3x3 zero-padded convolution of a fused map with a query-generated kernel.

    :param params_vector: (9 * C_mask + 1,) kernel weights followed by the bias
    :param fused: (h, w, C_mask) fused feature map
    :return: (h, w) mask logits
    """
    c_mask = fused.shape[-1]
    if params_vector.shape[-1] != 9 * c_mask + 1:
        raise ShapeError(f"Dynamic convolution on {c_mask} channels needs {9 * c_mask + 1} "
                         f"parameters, got {params_vector.shape[-1]}")
    kernel = params_vector[:9 * c_mask].reshape(3, 3, c_mask, 1)
    bias = params_vector[9 * c_mask]
    return conv2d({'w': kernel}, fused)[..., 0] + bias


class MaskHead(object):
    """Per-query box, class, embedding and mask predictions."""

    def __init__(self, hidden_dim, mask_channels=8, embed_dim=64, normalize_embeddings=True):
        self._dim = hidden_dim
        self._mask_channels = mask_channels
        self._embed_dim = embed_dim
        self.normalize_embeddings = normalize_embeddings

    @property
    def num_dynamic_params(self):
        return 9 * self._mask_channels + 1

    def init_params(self, key):
        kf, kd, kc, ke = jax.random.split(key, 4)
        return {'fpn_proj': conv_init(kf, 1, self._dim, self._mask_channels, bias=False),
                'dynamic': mlp_init(kd, (self._dim, self._dim, self.num_dynamic_params)),
                'cls': dense_init(kc, self._dim, 1),
                'embed': dense_init(ke, self._dim, self._embed_dim)}

    def split_levels(self, memory):
        """Encoder rows reshaped back to the pyramid levels."""
        levels, start = [], 0
        for h, w in memory.level_shapes:
            levels.append(memory.features[start:start + h * w].reshape(h, w, -1))
            start += h * w
        if start != memory.features.shape[0]:
            raise ShapeError(f"Memory has {memory.features.shape[0]} rows, levels account for {start}")
        return levels

    def fuse_fpn(self, params, memory):
        """Top-down sum of the upsampled levels, projected to C_mask channels.

        :return: (H/8, W/8, C_mask) fused map
        """
        levels = self.split_levels(memory)
        fused = levels[-1]
        for level in reversed(levels[:-1]):
            up = upsample_nearest(fused, level.shape[0] // fused.shape[0])
            if up.shape != level.shape:
                raise ShapeError(f"Cannot fuse level of shape {fused.shape} into {level.shape}")
            fused = up + level
        return conv2d(params['fpn_proj'], fused)

    def dynamic_params(self, params, queries):
        return mlp(params['dynamic'], queries)

    def __call__(self, params, box_params, decoder_out, fused):
        """
        :param box_params: shared box MLP parameters
        :param decoder_out: DecoderOutput
        :param fused: (h, w, C_mask) map from `fuse_fpn`
        :return: PredictionSet
        """
        queries = decoder_out.queries
        boxes = refine_boxes(box_params, queries, decoder_out.references[-1])
        dyn = self.dynamic_params(params, queries)
        masks = jax.vmap(dynamic_conv, in_axes=(0, None))(dyn, fused)
        class_logits = dense(params['cls'], queries)[:, 0]
        embeddings = dense(params['embed'], queries)
        if self.normalize_embeddings:
            sq_norm = jnp.sum(embeddings ** 2, axis=-1, keepdims=True)
            embeddings = embeddings * jax.lax.rsqrt(jnp.maximum(sq_norm, _EMBED_EPS ** 2))
        return PredictionSet(boxes, masks, class_logits, embeddings)
