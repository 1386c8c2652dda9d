# Model parameters storage, naming and checkpointing
#
# Copyright (c) 2026, pcan developers and contributors


import hashlib
import json
import logging
import os
from dataclasses import dataclass
from typing import Any

import numpy as np
import jax
import jax.numpy as jnp

from pcan.Util.exceptions import CheckpointError


__all__ = ['Parameters', 'Checkpoint', 'save_checkpoint', 'load_checkpoint',
           'read_checkpoint_meta']


logger = logging.getLogger(__name__)


_PARAM_PREFIX = 'param:'
_OPT_PREFIX = 'opt:'
_META_KEY = '__meta__'


def _path_name(path):
    parts = []
    for entry in path:
        for attr in ('key', 'idx', 'name'):
            if hasattr(entry, attr):
                parts.append(str(getattr(entry, attr)))
                break
        else:
            parts.append(str(entry))
    return '/'.join(parts)


class Parameters(object):
    """Named view of a parameter pytree.

    Names are the '/'-joined dict keys and list indices leading to each leaf,
    e.g. 'decoder/layers/0/self_attn/q/w'.
    """

    def __init__(self, params):
        self._params = params
        leaves_with_path, self._treedef = jax.tree_util.tree_flatten_with_path(params)
        self._names = [_path_name(path) for path, _ in leaves_with_path]
        self._leaves = [leaf for _, leaf in leaves_with_path]

    @property
    def tree(self):
        return self._params

    @property
    def names(self):
        return list(self._names)

    @property
    def num_parameters(self):
        return int(sum(np.size(leaf) for leaf in self._leaves))

    def named_arrays(self):
        return {name: np.asarray(leaf) for name, leaf in zip(self._names, self._leaves)}

    def checksum(self):
        """sha256 over the names, shapes, dtypes and bytes of every leaf."""
        h = hashlib.sha256()
        for name, leaf in sorted(self.named_arrays().items()):
            h.update(name.encode())
            h.update(str(leaf.shape).encode())
            h.update(str(leaf.dtype).encode())
            h.update(np.ascontiguousarray(leaf).tobytes())
        return h.hexdigest()

    def from_named_arrays(self, arrays):
        """Pytree of the same structure filled with the given named arrays."""
        missing = [n for n in self._names if n not in arrays]
        if missing:
            raise CheckpointError(f"Checkpoint lacks parameters {missing[:5]}")
        leaves = [jnp.asarray(arrays[n]) for n in self._names]
        return jax.tree_util.tree_unflatten(self._treedef, leaves)


@dataclass
class Checkpoint(object):
    params: Any
    opt_state: Any
    epoch: int
    config: dict
    config_hash: str


def save_checkpoint(path, params, opt_state, epoch, config, config_hash):
    """Write parameters, optimizer state and run metadata to a .npz file."""
    arrays = {_PARAM_PREFIX + name: value for name, value in Parameters(params).named_arrays().items()}
    if opt_state is not None:
        for i, leaf in enumerate(jax.tree_util.tree_leaves(opt_state)):
            arrays[f"{_OPT_PREFIX}{i:05d}"] = np.asarray(leaf)
    meta = {'epoch': int(epoch), 'config': config, 'config_hash': config_hash}
    arrays[_META_KEY] = np.array(json.dumps(meta, sort_keys=True))
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    tmp_path = path + '.tmp.npz'
    np.savez(tmp_path, **arrays)
    os.replace(tmp_path, path)
    logger.info("saved checkpoint of epoch %d to %s", epoch, path)


def load_checkpoint(path, params_template, opt_state_template=None):
    """Read a checkpoint written by `save_checkpoint`.

    :param params_template: pytree with the structure of the saved parameters
    :param opt_state_template: optimizer state with the saved structure, or None
     to skip the optimizer state
    :return: Checkpoint
    """
    if not os.path.isfile(path):
        raise CheckpointError(f"No checkpoint found at {path}")
    try:
        with np.load(path, allow_pickle=False) as data:
            content = {k: data[k] for k in data.files}
    except (OSError, ValueError) as e:
        raise CheckpointError(f"Unreadable checkpoint {path}: {e}") from e
    meta = json.loads(str(content[_META_KEY]))
    named = {k[len(_PARAM_PREFIX):]: v for k, v in content.items() if k.startswith(_PARAM_PREFIX)}
    params = Parameters(params_template).from_named_arrays(named)
    opt_state = None
    if opt_state_template is not None:
        leaves, treedef = jax.tree_util.tree_flatten(opt_state_template)
        saved = [content[k] for k in sorted(k for k in content if k.startswith(_OPT_PREFIX))]
        if len(saved) != len(leaves):
            raise CheckpointError(f"Optimizer state has {len(saved)} leaves, expected {len(leaves)}")
        opt_state = jax.tree_util.tree_unflatten(treedef, [jnp.asarray(s) for s in saved])
    return Checkpoint(params, opt_state, meta['epoch'], meta['config'], meta['config_hash'])


def read_checkpoint_meta(path):
    """Epoch, configuration and configuration hash stored in a checkpoint."""
    if not os.path.isfile(path):
        raise CheckpointError(f"No checkpoint found at {path}")
    try:
        with np.load(path, allow_pickle=False) as data:
            return json.loads(str(data[_META_KEY]))
    except (OSError, ValueError, KeyError) as e:
        raise CheckpointError(f"Unreadable checkpoint {path}: {e}") from e
