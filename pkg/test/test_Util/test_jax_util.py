import jax
import jax.numpy as jnp
import numpy.testing as npt
import pytest

from pcan.Util import jax_util


def test_layers():
    key = jax.random.PRNGKey(0)
    params = jax_util.dense_init(key, 3, 5)
    assert params['w'].shape == (3, 5) and jax_util.dense(params, jnp.ones((2, 3))).shape == (2, 5)
    assert 'b' not in jax_util.dense_init(key, 3, 5, bias=False)
    x = jax.random.normal(key, (4, 6))
    y = jax_util.layer_norm(jax_util.layer_norm_init(6), x)
    npt.assert_allclose(y.mean(axis=-1), 0., atol=1e-10)
    npt.assert_allclose(y.var(axis=-1), 1., atol=1e-4)
    conv = jax_util.conv_init(key, 3, 2, 4)
    assert jax_util.conv2d(conv, jnp.ones((8, 8, 2)), stride=2).shape == (4, 4, 4)
    mlp = jax_util.mlp_init(key, (3, 7, 2))
    assert len(mlp) == 2 and jax_util.mlp(mlp, jnp.ones(3)).shape == (2,)


def test_sine_encodings():
    enc = jax_util.sine_encoding_1d(5, 8)
    assert enc.shape == (5, 8)
    npt.assert_allclose(enc[0, ::2], 0., atol=1e-12)
    npt.assert_allclose(enc[0, 1::2], 1., atol=1e-12)
    assert jax_util.sine_encoding_2d(4, 3, 8).shape == (12, 8)
    with pytest.raises(ValueError):
        jax_util.sine_encoding_2d(4, 3, 6)
    coords = jax_util.sine_encoding_coords(jnp.full((2, 4), .25), 8)
    assert coords.shape == (2, 32)
    npt.assert_allclose(coords[:, :8], coords[:, 8:16])


def test_is_concrete():
    assert jax_util.is_concrete(jnp.ones(2))
    assert jax.jit(lambda x: jnp.asarray(jax_util.is_concrete(x)))(jnp.ones(2)).item() is False
