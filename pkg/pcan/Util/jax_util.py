# Classes and functions to use with JAX
#
# Copyright (c) 2026, pcan developers and contributors

"""Parameter initializers, stateless layers and positional encodings.

Parameters are plain nested dicts of arrays so that they can be handled as
pytrees by `jax.grad`, `optax` and the checkpoint code alike.
"""

import math

import jax
import jax.numpy as jnp
from jax.lax import conv_general_dilated, conv_dimension_numbers


__all__ = ['dense_init', 'dense', 'layer_norm_init', 'layer_norm', 'conv_init',
           'conv2d', 'mlp_init', 'mlp', 'sine_encoding_1d', 'sine_encoding_2d',
           'sine_encoding_coords', 'is_concrete']


_glorot = jax.nn.initializers.glorot_uniform()


def dense_init(key, d_in, d_out, bias=True):
    params = {'w': _glorot(key, (d_in, d_out), jnp.zeros(()).dtype)}
    if bias:
        params['b'] = jnp.zeros((d_out,))
    return params


def dense(params, x):
    y = x @ params['w']
    if 'b' in params:
        y = y + params['b']
    return y


def layer_norm_init(dim):
    return {'scale': jnp.ones((dim,)), 'offset': jnp.zeros((dim,))}


def layer_norm(params, x, eps=1e-5):
    mean = jnp.mean(x, axis=-1, keepdims=True)
    var = jnp.var(x, axis=-1, keepdims=True)
    return (x - mean) / jnp.sqrt(var + eps) * params['scale'] + params['offset']


def conv_init(key, size, c_in, c_out, bias=True):
    params = {'w': _glorot(key, (size, size, c_in, c_out), jnp.zeros(()).dtype)}
    if bias:
        params['b'] = jnp.zeros((c_out,))
    return params


def conv2d(params, x, stride=1, padding='SAME'):
    """2-D convolution of a single (H, W, C) map with an HWIO kernel."""
    kernel = params['w']
    dtype = jnp.result_type(x, kernel)
    x, kernel = x.astype(dtype), kernel.astype(dtype)
    dn = conv_dimension_numbers((1,) + x.shape, kernel.shape, ('NHWC', 'HWIO', 'NHWC'))
    y = conv_general_dilated(x[None], kernel, window_strides=(stride, stride),
                             padding=padding, dimension_numbers=dn)[0]
    if 'b' in params:
        y = y + params['b']
    return y


def mlp_init(key, dims):
    keys = jax.random.split(key, len(dims) - 1)
    return [dense_init(k, d_in, d_out) for k, d_in, d_out in zip(keys, dims[:-1], dims[1:])]


def mlp(params, x, activation=jax.nn.relu):
    for layer in params[:-1]:
        x = activation(dense(layer, x))
    return dense(params[-1], x)


def _sine(positions, dim, temperature):
    """Interleaved sin/cos features of shape positions.shape + (dim,)."""
    i = jnp.arange(dim)
    freqs = temperature ** (2 * (i // 2) / dim)
    angles = positions[..., None] / freqs
    return jnp.where(i % 2 == 0, jnp.sin(angles), jnp.cos(angles))


def sine_encoding_1d(length, dim, temperature=10000.):
    """Sinusoidal encoding of the positions 0..length-1, shape (length, dim)."""
    return _sine(jnp.arange(length, dtype=jnp.zeros(()).dtype), dim, temperature)


def sine_encoding_2d(height, width, dim, temperature=10000.):
    """Sinusoidal encoding of normalized pixel centres, shape (height*width, dim).

    The first half of the channels encodes the row, the second half the column.
    """
    if dim % 4 != 0:
        raise ValueError(f"2-D sine encoding needs a channel count divisible by 4, got {dim}")
    ys = (jnp.arange(height) + 0.5) / height * 2. * math.pi
    xs = (jnp.arange(width) + 0.5) / width * 2. * math.pi
    pos_y = jnp.broadcast_to(_sine(ys, dim // 2, temperature)[:, None, :], (height, width, dim // 2))
    pos_x = jnp.broadcast_to(_sine(xs, dim // 2, temperature)[None, :, :], (height, width, dim // 2))
    return jnp.concatenate([pos_y, pos_x], axis=-1).reshape(height * width, dim)


def sine_encoding_coords(coords, dim_per_coord, temperature=10000.):
    """Encode every coordinate in [0, 1] of the last axis, e.g. anchor boxes.

    :param coords: array of shape (..., k)
    :return: array of shape (..., k * dim_per_coord)
    """
    features = _sine(coords * 2. * math.pi, dim_per_coord, temperature)
    return features.reshape(coords.shape[:-1] + (coords.shape[-1] * dim_per_coord,))


def is_concrete(x):
    """False inside jit / grad / vmap traces, where values are unknown."""
    return not isinstance(x, jax.core.Tracer)
