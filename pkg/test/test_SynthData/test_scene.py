import numpy as np
import numpy.testing as npt
import pytest

from pcan.Geometry.box import BoxConvention
from pcan.SynthData import grammar
from pcan.SynthData.scene import SceneConfig, generate_dataset, generate_scene, render_mask
from pcan.Util.exceptions import ConfigurationError, GenerationError
from pcan.Util.util import seeded_rng


def test_every_expression_refers_to_its_target_only(scenes):
    for scene in scenes:
        assert grammar.evaluate(scene.expression, scene.objects) == [scene.target_index]
        assert list(scene.tokens) == grammar.encode(scene.expression.words())


def test_scene_contents(scenes):
    for scene in scenes:
        assert 2 <= len(scene.objects) <= 6
        assert scene.image.shape == (64, 64, 3) and scene.image.dtype == np.float32
        assert scene.image.min() >= 0. and scene.image.max() <= 1.
        for obj in scene.objects:
            x1, y1, x2, y2 = obj.box.to(BoxConvention.CORNER_ABSOLUTE, (64, 64)).corners()
            ys, xs = np.nonzero(obj.mask)
            assert len(ys) > 0
            assert xs.min() >= x1 - 1e-9 and xs.max() < x2 + 1e-9
            assert ys.min() >= y1 - 1e-9 and ys.max() < y2 + 1e-9
        # objects never overlap
        total = np.sum([obj.mask for obj in scene.objects], axis=0)
        assert total.max() == 1


def test_first_distractor_shares_an_attribute(scenes):
    # the target and its twin may land anywhere after the shuffle, so check
    # that some other object shares the shape or the color of the target
    for scene in scenes:
        t = scene.target
        others = [o for i, o in enumerate(scene.objects) if i != scene.target_index]
        assert any(o.shape == t.shape or o.color == t.color for o in others)


def test_split_tagging():
    records = generate_dataset(10, seed=3)
    assert [r.split for r in records] == ['train'] * 8 + ['val'] * 2
    assert [r.scene_id for r in records] == list(range(10))


def test_generation_is_deterministic_and_order_independent(scenes):
    again = generate_dataset(10, seed=0)
    for a, b in zip(scenes, again):
        npt.assert_array_equal(a.image, b.image)
        assert a.expression == b.expression and a.target_index == b.target_index
        assert a.detections == b.detections
    # scene 7 alone, from its own stream
    alone = generate_scene(7, SceneConfig(), seeded_rng(0, 7, 0), split='train')
    npt.assert_array_equal(alone.image, scenes[7].image)


def test_other_seed_gives_other_scenes(scenes):
    other = generate_dataset(3, seed=1)
    assert any(not np.array_equal(a.image, b.image) for a, b in zip(scenes, other))


def test_stride_mask(scenes):
    scene = scenes[0]
    small = scene.mask_at_stride(8)
    assert small.shape == (8, 8)
    assert set(np.unique(small)) <= {0., 1.}
    block = scene.target_mask.reshape(8, 8, 8, 8).mean(axis=(1, 3))
    npt.assert_array_equal(small, (block >= 0.5).astype(np.float32))


def test_padded_tokens(scenes):
    scene = scenes[0]
    tokens = scene.padded_tokens()
    assert tokens.shape == (grammar.MAX_TOKENS,)
    assert list(tokens[:scene.expression_length]) == list(scene.tokens)
    assert np.all(tokens[scene.expression_length:] == grammar.PAD_ID)


@pytest.mark.parametrize("shape", grammar.SHAPES)
def test_render_mask_stays_inside_its_square(shape):
    mask = render_mask(shape, 10, 20, 12, 64, 64)
    ys, xs = np.nonzero(mask)
    assert xs.min() >= 10 and xs.max() <= 21 and ys.min() >= 20 and ys.max() <= 31
    assert mask.sum() <= 144


def test_indistinguishable_objects_exhaust_the_budget():
    config = SceneConfig(colors=('red',), shapes=('circle',), sizes=('small',),
                         min_objects=2, max_objects=2, max_resample=5)
    with pytest.raises(GenerationError):
        generate_scene(0, config, seeded_rng(0))


@pytest.mark.parametrize(
    "kwargs",
    [dict(height=60), dict(min_objects=1), dict(max_objects=7), dict(colors=('pink',)),
     dict(val_fraction=1.)],
)
def test_invalid_scene_config(kwargs):
    with pytest.raises(ConfigurationError):
        SceneConfig(**kwargs).validate()
