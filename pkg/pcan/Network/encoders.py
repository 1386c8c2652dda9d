# Defines the visual and linguistic feature extractors
#
# Copyright (c) 2026, pcan developers and contributors


from functools import partial
from typing import NamedTuple

import jax
import jax.numpy as jnp
import numpy as np
from jax import jit

from pcan.Network.layers import self_attention_layer_init, self_attention_layer
from pcan.Util.exceptions import ShapeError
from pcan.Util.jax_util import (conv_init, conv2d, dense_init, dense, sine_encoding_1d,
                                is_concrete)


__all__ = ['VisualEncoder', 'TextFeatures', 'TextEncoder', 'LanguageGate']


class VisualEncoder(object):
    """Strided convolution stack emitting features at strides 8, 16 and 32.

    Every level is projected to `hidden_dim` channels by a 1x1 convolution.
    """

    strides = (8, 16, 32)

    def __init__(self, hidden_dim, width=16):
        self._dim = hidden_dim
        # (stride of the output, output channels) of every 3x3 stride-2 conv
        self._stages = ((2, width), (4, width), (8, 2 * width), (16, 4 * width), (32, 4 * width))

    def init_params(self, key):
        keys = jax.random.split(key, len(self._stages) + len(self.strides))
        params = {'stages': [], 'proj': []}
        c_in = 3
        for k, (_, c_out) in zip(keys, self._stages):
            params['stages'].append(conv_init(k, 3, c_in, c_out))
            c_in = c_out
        level_channels = [c for s, c in self._stages if s in self.strides]
        for k, c in zip(keys[len(self._stages):], level_channels):
            params['proj'].append(conv_init(k, 1, c, self._dim))
        return params

    @staticmethod
    def check_image(image):
        if image.ndim != 3 or image.shape[-1] != 3:
            raise ShapeError(f"Expected an H x W x 3 image, got shape {image.shape}")
        if image.shape[0] % 32 != 0 or image.shape[1] % 32 != 0:
            raise ShapeError(f"Image height and width must be multiples of 32, got {image.shape[:2]}")

    @partial(jit, static_argnums=(0,))
    def __call__(self, params, image):
        """
        :param image: (H, W, 3) array with H, W multiples of 32
        :return: tuple of (H/s, W/s, C) maps for s in 8, 16, 32
        """
        self.check_image(image)
        x = image
        features = []
        for (stride, _), stage in zip(self._stages, params['stages']):
            x = jax.nn.gelu(conv2d(stage, x, stride=2))
            if stride in self.strides:
                features.append(x)
        return tuple(conv2d(p, f) for p, f in zip(params['proj'], features))


class TextFeatures(NamedTuple):
    words: jnp.ndarray     # (L, C)
    sentence: jnp.ndarray  # (C,)
    mask: jnp.ndarray      # (L,), True on real tokens


class TextEncoder(object):
    """Token embedding, sinusoidal positions and one self-attention layer."""

    def __init__(self, vocab_size, hidden_dim, num_heads=4, max_tokens=16, pooling='mean',
                 ffn_ratio=4, pad_id=0):
        if pooling not in ('mean', 'max'):
            raise ValueError(f"Pooling '{pooling}' is not supported")
        self._vocab_size = vocab_size
        self._dim = hidden_dim
        self._heads = num_heads
        self._max_tokens = max_tokens
        self._pooling = pooling
        self._ffn_ratio = ffn_ratio
        self._pad_id = pad_id

    def init_params(self, key):
        ke, kl = jax.random.split(key)
        return {'embedding': jax.random.normal(ke, (self._vocab_size, self._dim)) / jnp.sqrt(self._dim),
                'layer': self_attention_layer_init(kl, self._dim, self._ffn_ratio)}

    def check_tokens(self, tokens):
        if tokens.ndim != 1 or not 1 <= tokens.shape[0] <= self._max_tokens:
            raise ShapeError(f"Expected between 1 and {self._max_tokens} tokens, got shape {tokens.shape}")
        if is_concrete(tokens):
            values = np.asarray(tokens)
            if int(np.max(values)) >= self._vocab_size or int(np.min(values)) < 0:
                raise ShapeError(f"Token ids must lie in [0, {self._vocab_size}), got {tokens}")
            if not bool(np.any(values != self._pad_id)):
                raise ShapeError("The expression holds no token")

    def embed(self, params, tokens):
        """Word embeddings before positional encoding, (L, C)."""
        return params['embedding'][tokens]

    def __call__(self, params, tokens):
        """
        :param tokens: (L,) int array, right-padded with the pad id
        :return: TextFeatures
        """
        self.check_tokens(tokens)
        mask = tokens != self._pad_id
        x = self.embed(params, tokens) + sine_encoding_1d(tokens.shape[0], self._dim)
        words = self_attention_layer(params['layer'], x, self._heads, key_mask=mask)
        if self._pooling == 'mean':
            weights = mask.astype(words.dtype)
            sentence = (weights[:, None] * words).sum(axis=0) / weights.sum()
        else:
            sentence = jnp.max(jnp.where(mask[:, None], words, -jnp.inf), axis=0)
        return TextFeatures(words, sentence, mask)


class LanguageGate(object):
    """Channel-wise sigmoid gate computed from the sentence feature."""

    def __init__(self, hidden_dim, enabled=True):
        self._dim = hidden_dim
        self.enabled = enabled

    def init_params(self, key):
        return dense_init(key, self._dim, self._dim)

    def __call__(self, params, pyramid, sentence):
        if not self.enabled:
            return pyramid
        if sentence.shape[-1] != pyramid[0].shape[-1]:
            raise ShapeError("Sentence and visual channel dimensions differ")
        gate = jax.nn.sigmoid(dense(params, sentence))
        return tuple(level * gate for level in pyramid)
