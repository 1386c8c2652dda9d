# Utility functions
#
# Copyright (c) 2026, pcan developers and contributors


import functools
import json
import re

import numpy as np
import jax.numpy as jnp


__all__ = ['inverse_sigmoid', 'seeded_rng', 'counted', 'read_json',
           'write_json', 'canonical_json']


def inverse_sigmoid(x, eps=1e-5):
    """Logit of x, with x clipped away from 0 and 1.

    :param x: array with values in [0, 1]
    :param eps: clipping margin
    :return: log(x / (1 - x))
    """
    x = jnp.clip(x, 0., 1.)
    x1 = jnp.clip(x, eps, None)
    x2 = jnp.clip(1. - x, eps, None)
    return jnp.log(x1 / x2)


def seeded_rng(*keys):
    """Independent numpy random stream derived from a tuple of integers.

    Streams obtained from distinct key tuples never share state, which makes
    per-scene (and per-epoch) generation order-independent.

    :param keys: non-negative integers, e.g. (seed, scene_index)
    :return: numpy.random.Generator
    """
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in keys]))


def counted(func):
    """Decorator adding a `calls` counter to a function.

    The counter is used to check that inference never reaches the
    training-only code paths.
    """
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        wrapper.calls += 1
        return func(*args, **kwargs)
    wrapper.calls = 0
    return wrapper


def read_json(input_path):
    """Read a JSON file, allowing /* block */ and // line comments."""
    with open(input_path, 'r') as f:
        input_str = f.read()
        input_str = re.sub(re.compile(r"/\*.*?\*/", re.DOTALL), "", input_str)
        input_str = re.sub(re.compile(r"(^|\s)//.*?\n"), "\n", input_str)
        json_in = json.loads(input_str)
    return json_in


def canonical_json(obj):
    """Deterministic JSON encoding (sorted keys, no whitespace)."""
    return json.dumps(obj, sort_keys=True, separators=(',', ':'))


def write_json(obj, output_path, indent=2):
    with open(output_path, 'w') as f:
        json.dump(obj, f, indent=indent, sort_keys=True)
        f.write('\n')
