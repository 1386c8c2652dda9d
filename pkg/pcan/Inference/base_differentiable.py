# Defines a general fully differentiable scalar function and its gradient check
#
# Copyright (c) 2026, pcan developers and contributors


from functools import partial

import numpy as np
import jax.numpy as jnp
from jax import jit, grad, value_and_grad
from jax.flatten_util import ravel_pytree


__all__ = ['Differentiable', 'DifferentiableFunction', 'gradient_relative_error']


class Differentiable(object):

    """Abstract class that defines a scalar function of a pytree with its derivatives.
    """

    @partial(jit, static_argnums=(0,))
    def __call__(self, args):
        """alias differentiable function"""
        return self._func(args)

    @partial(jit, static_argnums=(0,))
    def function(self, args):
        return self._func(args)

    @partial(jit, static_argnums=(0,))
    def gradient(self, args):
        """gradient (first derivative) of the function, same structure as args"""
        return grad(self._func)(args)

    @partial(jit, static_argnums=(0,))
    def value_and_gradient(self, args):
        return value_and_grad(self._func)(args)

    def finite_difference_check(self, args, num_coords=12, step=1e-6, seed=0):
        """Relative error between `gradient` and central finite differences.

        :param args: pytree at which the derivatives are compared
        :param num_coords: number of randomly chosen flattened coordinates
        :param step: finite-difference step
        :param seed: seed of the coordinate choice
        :return: ||g - g_fd|| / max(||g||, ||g_fd||) over the chosen coordinates
        """
        flat, unravel = ravel_pytree(args)
        flat = np.asarray(flat, dtype=np.float64)
        rng = np.random.default_rng(seed)
        indices = rng.choice(flat.size, size=min(num_coords, flat.size), replace=False)
        analytic = np.asarray(ravel_pytree(self.gradient(args))[0])[indices]
        numeric = np.empty(len(indices))
        for j, i in enumerate(indices):
            plus, minus = flat.copy(), flat.copy()
            plus[i] += step
            minus[i] -= step
            f_plus = float(self._func(unravel(jnp.asarray(plus))))
            f_minus = float(self._func(unravel(jnp.asarray(minus))))
            numeric[j] = (f_plus - f_minus) / (2. * step)
        scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric))
        if scale == 0.:
            return 0.
        return float(np.linalg.norm(analytic - numeric) / scale)


class DifferentiableFunction(Differentiable):
    """Wraps a plain scalar function of a pytree."""

    def __init__(self, func):
        self._func = func


def gradient_relative_error(func, args, num_coords=12, step=1e-6, seed=0):
    """Shortcut for `DifferentiableFunction(func).finite_difference_check(...)`."""
    return DifferentiableFunction(func).finite_difference_check(args, num_coords, step, seed)
