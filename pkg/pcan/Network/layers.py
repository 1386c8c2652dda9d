# Defines the attention blocks shared by the text encoder and the transformer
#
# Copyright (c) 2026, pcan developers and contributors


import jax
import jax.numpy as jnp

from pcan.Util.jax_util import dense_init, dense, layer_norm_init, layer_norm


__all__ = ['attention_init', 'multi_head_attention', 'ffn_init', 'ffn',
           'self_attention_layer_init', 'self_attention_layer']


_MASKED_SCORE = -1e9


def attention_init(key, dim):
    kq, kk, kv, ko = jax.random.split(key, 4)
    return {'q': dense_init(kq, dim, dim), 'k': dense_init(kk, dim, dim),
            'v': dense_init(kv, dim, dim), 'o': dense_init(ko, dim, dim)}


def multi_head_attention(params, query, key, value, num_heads, key_mask=None):
    """Dense scaled dot-product attention.

    :param query: (Lq, C)
    :param key: (Lk, C)
    :param value: (Lk, C)
    :param key_mask: optional boolean (Lk,), False entries are ignored
    :return: (Lq, C)
    """
    dim = query.shape[-1]
    head_dim = dim // num_heads
    q = dense(params['q'], query).reshape(query.shape[0], num_heads, head_dim)
    k = dense(params['k'], key).reshape(key.shape[0], num_heads, head_dim)
    v = dense(params['v'], value).reshape(value.shape[0], num_heads, head_dim)
    scores = jnp.einsum('qhd,khd->hqk', q, k) / jnp.sqrt(head_dim)
    if key_mask is not None:
        scores = jnp.where(key_mask[None, None, :], scores, _MASKED_SCORE)
    weights = jax.nn.softmax(scores, axis=-1)
    out = jnp.einsum('hqk,khd->qhd', weights, v).reshape(query.shape[0], dim)
    return dense(params['o'], out)


def ffn_init(key, dim, hidden):
    k1, k2 = jax.random.split(key)
    return {'fc1': dense_init(k1, dim, hidden), 'fc2': dense_init(k2, hidden, dim)}


def ffn(params, x):
    return dense(params['fc2'], jax.nn.gelu(dense(params['fc1'], x)))


def self_attention_layer_init(key, dim, ffn_ratio=4):
    ka, kf = jax.random.split(key)
    return {'norm1': layer_norm_init(dim), 'attn': attention_init(ka, dim),
            'norm2': layer_norm_init(dim), 'ffn': ffn_init(kf, dim, ffn_ratio * dim)}


def self_attention_layer(params, x, num_heads, key_mask=None):
    """Pre-norm residual block: self-attention then feed-forward."""
    h = layer_norm(params['norm1'], x)
    x = x + multi_head_attention(params['attn'], h, h, h, num_heads, key_mask=key_mask)
    return x + ffn(params['ffn'], layer_norm(params['norm2'], x))
