from dataclasses import replace

import jax
import jax.numpy as jnp
import numpy as np
import pytest

from pcan.Harness.config import OptimConfig
from pcan.Inference.base_differentiable import DifferentiableFunction, gradient_relative_error
from pcan.Inference.loss import LossWeights, SceneLoss
from pcan.Inference.loss_terms import (cls_focal, contrastive_alignment, dice_loss, giou_loss,
                                       l1_box_loss, mask_focal)
from pcan.Inference.optimization import Trainer
from pcan.PositionAware.prior_sources import get_prior_source


def test_value_and_gradient_agree():
    func = DifferentiableFunction(lambda x: jnp.sum(x ** 3))
    x = jnp.array([1., -2., .5])
    value, grad = func.value_and_gradient(x)
    np.testing.assert_allclose(value, func(x))
    np.testing.assert_allclose(grad, 3. * x ** 2)
    np.testing.assert_allclose(func.gradient(x), grad)


def test_contrastive_alignment_gradient(rng):
    args = {'y_p': jnp.asarray(rng.normal(size=8)), 'groups': jnp.asarray(rng.normal(size=(3, 6, 8)))}

    def f(a):
        return contrastive_alignment(a['y_p'], a['groups'], jnp.array([0, 3, 5]), tau=.2)
    assert gradient_relative_error(f, args, num_coords=30) < 1e-3


@pytest.mark.slow
def test_scene_loss_gradient(tiny_model, tiny_params, scenes, pam_config):
    loss = SceneLoss(tiny_model, LossWeights())
    trainer = Trainer(tiny_model, loss, replace(pam_config, k_neg=3, groups=2),
                      get_prior_source('gt+oracle+conditional'), OptimConfig())
    batch = trainer.make_batch(scenes[:1], epoch=1)

    def f(params):
        return loss(params, batch)[0]
    assert gradient_relative_error(f, tiny_params, num_coords=8, seed=1) < 1e-3


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_network_block_gradients(seed):
    from pcan.Network.encoders import TextEncoder, VisualEncoder
    from pcan.Network.layers import self_attention_layer, self_attention_layer_init
    from pcan.Network.mask_head import MaskHead, dynamic_conv
    from pcan.Network.transformer import Memory
    key = jax.random.PRNGKey(seed)
    k1, k2, k3, k4 = jax.random.split(key, 4)

    x = jax.random.normal(k1, (5, 8))
    block = self_attention_layer_init(k2, 8, ffn_ratio=2)
    assert gradient_relative_error(
        lambda a: jnp.sum(self_attention_layer(a['p'], a['x'], 2) ** 2), {'p': block, 'x': x}, seed=seed) < 1e-3

    fused = jax.random.normal(k3, (4, 4, 2))
    assert gradient_relative_error(
        lambda a: jnp.sum(jnp.tanh(dynamic_conv(a['v'], a['f']))),
        {'v': jax.random.normal(k4, (19,)), 'f': fused}, seed=seed) < 1e-3

    head = MaskHead(8, mask_channels=2, embed_dim=4)
    shapes = ((4, 4), (2, 2), (1, 1))

    def fpn(a):
        memory = Memory(a['rows'], jnp.zeros_like(a['rows']), shapes)
        return jnp.sum(jnp.sin(head.fuse_fpn(a['p'], memory)))
    assert gradient_relative_error(fpn, {'p': head.init_params(k1), 'rows': jax.random.normal(k2, (21, 8))},
                                   seed=seed) < 1e-3

    text = TextEncoder(20, 8, num_heads=2)
    tokens = jnp.array([3, 5, 7, 0])
    assert gradient_relative_error(lambda p: jnp.sum(text(p, tokens).sentence ** 2), text.init_params(k3),
                                   seed=seed) < 1e-3

    visual = VisualEncoder(8, width=2)
    image = jax.random.uniform(k4, (32, 32, 3))
    assert gradient_relative_error(lambda p: sum(jnp.sum(level ** 2) for level in visual(p, image)),
                                   visual.init_params(k1), seed=seed) < 1e-3


def _random_box(rng):
    return jnp.asarray(np.concatenate([rng.uniform(.3, .7, 2), rng.uniform(.1, .4, 2)]))


def _box_case(term):
    def make(rng):
        gt = _random_box(rng)
        return (lambda box: term(box, gt)), _random_box(rng)
    return make


def _mask_case(term):
    def make(rng):
        gt = jnp.asarray(rng.uniform(size=(8, 8)) > .6, dtype=float)
        return (lambda logits: term(logits, gt)), jnp.asarray(rng.normal(size=(8, 8)))
    return make


def _class_case(rng):
    labels = jnp.asarray(rng.integers(0, 2, size=6), dtype=float)
    return (lambda logits: cls_focal(logits, labels)), jnp.asarray(rng.normal(size=6))


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize(
    "make_case",
    [_box_case(l1_box_loss), _box_case(giou_loss), _mask_case(dice_loss), _mask_case(mask_focal), _class_case],
    ids=['l1', 'giou', 'dice', 'mask_focal', 'cls_focal'],
)
def test_loss_term_gradients(make_case, seed):
    func, args = make_case(np.random.default_rng(seed))
    assert gradient_relative_error(func, args, num_coords=12, seed=seed) < 1e-3


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_transformer_layer_gradients(seed):
    from pcan.Network.transformer import (Memory, TransformerDecoder, TransformerEncoder,
                                          box_head_init)
    key = jax.random.PRNGKey(seed)
    k1, k2, k3, k4, k5 = jax.random.split(key, 5)
    encoder = TransformerEncoder(8, num_layers=1, num_heads=2, ffn_ratio=2)
    pyramid = (jax.random.normal(k1, (4, 4, 8)), jax.random.normal(k2, (2, 2, 8)))
    assert gradient_relative_error(
        lambda a: jnp.sum(jnp.sin(encoder(a['p'], a['levels']).features)),
        {'p': encoder.init_params(k3), 'levels': pyramid}, seed=seed) < 1e-3

    decoder = TransformerDecoder(8, num_layers=1, num_heads=2, ffn_ratio=2)
    shapes = ((4, 4), (2, 2))
    positions = jax.random.normal(k4, (20, 8))
    anchors = jax.nn.sigmoid(jax.random.normal(k5, (3, 4)))
    # a non-zero last layer lets the box output depend on the queries
    box_params = jax.tree_util.tree_map(lambda x: x + .1, box_head_init(k1, 8))

    def decode(a):
        memory = Memory(a['features'], positions, shapes)
        out = decoder(a['p'], a['box'], memory, a['content'], anchors)
        return jnp.sum(out.queries ** 2) + jnp.sum(out.boxes[-1])
    args = {'p': decoder.init_params(k2), 'box': box_params,
            'features': jax.random.normal(k3, (20, 8)), 'content': jax.random.normal(k4, (3, 8))}
    assert gradient_relative_error(decode, args, seed=seed) < 1e-3
