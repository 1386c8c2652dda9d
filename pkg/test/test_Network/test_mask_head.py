import jax
import jax.numpy as jnp
import numpy as np
import numpy.testing as npt
import pytest

from pcan.Network.mask_head import MaskHead, dynamic_conv
from pcan.Network.transformer import DecoderOutput, Memory, box_head_init
from pcan.Util.exceptions import ShapeError


def test_dynamic_conv_matches_a_direct_correlation(rng):
    fused = rng.normal(size=(6, 5, 3))
    vector = rng.normal(size=9 * 3 + 1)
    kernel, bias = vector[:27].reshape(3, 3, 3), vector[27]
    padded = np.pad(fused, ((1, 1), (1, 1), (0, 0)))
    expected = np.zeros((6, 5))
    for y in range(6):
        for x in range(5):
            expected[y, x] = np.sum(kernel * padded[y:y + 3, x:x + 3]) + bias
    npt.assert_allclose(dynamic_conv(jnp.asarray(vector), jnp.asarray(fused)), expected, atol=1e-10)


def test_dynamic_conv_is_affine_in_the_fused_map(rng):
    x, y = jnp.asarray(rng.normal(size=(2, 6, 6, 4)))
    vector = jnp.asarray(rng.normal(size=9 * 4 + 1))
    a, b = 0.7, -1.3
    bias_plane = vector[-1] * jnp.ones((6, 6))
    expected = a * dynamic_conv(vector, x) + b * dynamic_conv(vector, y) - (a + b - 1.) * bias_plane
    npt.assert_allclose(dynamic_conv(vector, a * x + b * y), expected, atol=1e-10)


def test_dynamic_conv_checks_its_parameter_count():
    with pytest.raises(ShapeError):
        dynamic_conv(jnp.zeros(10), jnp.zeros((4, 4, 3)))


def test_fpn_fusion_and_query_heads():
    key = jax.random.PRNGKey(0)
    head = MaskHead(16, mask_channels=4, embed_dim=8)
    params = head.init_params(key)
    memory = Memory(jax.random.normal(key, (84, 16)), jnp.zeros((84, 16)), ((8, 8), (4, 4), (2, 2)))
    fused = head.fuse_fpn(params, memory)
    assert fused.shape == (8, 8, 4)
    anchors = jnp.full((3, 5, 4), .5)
    out = DecoderOutput(jax.random.normal(key, (5, 16)), anchors, anchors)
    preds = head(params, box_head_init(key, 16), out, fused)
    assert preds.boxes.shape == (5, 4) and preds.mask_logits.shape == (5, 8, 8)
    assert preds.class_logits.shape == (5,) and preds.embeddings.shape == (5, 8)
    npt.assert_allclose(jnp.linalg.norm(preds.embeddings, axis=-1), 1., atol=1e-12)
    npt.assert_allclose(preds.boxes, anchors[-1], atol=1e-12)


def test_split_levels_rejects_inconsistent_memory():
    head = MaskHead(16)
    memory = Memory(jnp.zeros((80, 16)), jnp.zeros((80, 16)), ((8, 8), (4, 4), (2, 2)))
    with pytest.raises(ShapeError):
        head.split_levels(memory)


def test_zero_embeddings_stay_finite():
    key = jax.random.PRNGKey(1)
    head = MaskHead(16, mask_channels=4, embed_dim=8)
    params = head.init_params(key)
    params['embed'] = jax.tree_util.tree_map(jnp.zeros_like, params['embed'])
    memory = Memory(jax.random.normal(key, (84, 16)), jnp.zeros((84, 16)), ((8, 8), (4, 4), (2, 2)))
    fused = head.fuse_fpn(params, memory)
    anchors = jnp.full((3, 5, 4), .5)
    out = DecoderOutput(jax.random.normal(key, (5, 16)), anchors, anchors)
    box_params = box_head_init(key, 16)

    def embedding_sum(embed):
        return head(dict(params, embed=embed), box_params, out, fused).embeddings.sum()

    preds = head(params, box_params, out, fused)
    npt.assert_array_equal(preds.embeddings, 0.)
    grads = jax.grad(embedding_sum)(params['embed'])
    assert all(bool(jnp.all(jnp.isfinite(g))) for g in jax.tree_util.tree_leaves(grads))
