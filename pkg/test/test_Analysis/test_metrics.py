import numpy as np
import numpy.testing as npt
import pytest

from pcan.Analysis import metrics
from pcan.Geometry.box import Box
from pcan.Util.exceptions import ShapeError


def _pair(inter, union, size=8):
    """Masks with the given intersection and union counts."""
    pred = np.zeros(size, dtype=bool)
    gt = np.zeros(size, dtype=bool)
    pred[:union] = True
    gt[:inter] = True
    return pred, gt


PAIRS = [_pair(2, 4), _pair(0, 2)]


def test_overall_and_mean_iou_differ():
    npt.assert_allclose(metrics.oiou(PAIRS), 1. / 3.)
    npt.assert_allclose(metrics.miou(PAIRS), .25)
    inter, union = metrics.pair_counts(PAIRS)
    assert inter.dtype == np.int64 and list(inter) == [2, 0] and list(union) == [4, 2]


def test_empty_unions_count_as_perfect():
    empty = [(np.zeros((4, 4)), np.zeros((4, 4)))]
    assert metrics.oiou(empty) == 1. and metrics.miou(empty) == 1.
    npt.assert_allclose(metrics.per_pair_iou(PAIRS + empty), [.5, 0., 1.])


def test_precision_is_strict():
    pairs = [_pair(11, 20, 20), _pair(15, 20, 20), _pair(10, 20, 20)]  # 0.55, 0.75, 0.5
    precision = metrics.precision_at(pairs)
    assert precision == {.5: 2. / 3., .6: 1. / 3., .7: 1. / 3., .8: 0., .9: 0.}
    with pytest.raises(ValueError):
        metrics.precision_at(pairs, (0.5, 1.))


def test_buckets_add_up_to_the_corpus(rng):
    pairs = [(rng.uniform(size=(6, 6)) > .5, rng.uniform(size=(6, 6)) > .5) for _ in range(30)]
    lengths = rng.integers(1, 10, size=30)
    buckets = metrics.bucketed_iou(lengths, pairs)
    assert list(buckets) == ['1-2', '3', '4-5', '6+']
    inter, union = metrics.pair_counts(pairs)
    assert sum(b['count'] for b in buckets.values()) == 30
    assert sum(b['intersection'] for b in buckets.values()) == inter.sum()
    assert sum(b['union'] for b in buckets.values()) == union.sum()
    for b in buckets.values():
        if b['union']:
            npt.assert_allclose(b['oiou'], b['intersection'] / b['union'])


def test_bucket_errors():
    with pytest.raises(ValueError):
        metrics.bucketed_iou([0, 3], PAIRS)
    with pytest.raises(ValueError):
        metrics.bucketed_iou([3], PAIRS)
    with pytest.raises(ShapeError):
        metrics.pair_counts([(np.zeros(3), np.zeros(4))])


def test_bucket_labels():
    assert [metrics.bucket_label(b) for b in metrics.LENGTH_BUCKETS] == ['1-2', '3', '4-5', '6+']


def test_heuristic_baseline_takes_the_largest_object():
    class Obj(object):
        def __init__(self, box):
            self.box = box

    class Scene(object):
        height, width = 8, 8
        objects = [Obj(Box(0., 0., .25, .25)), Obj(Box(.5, .5, 1., 1.)), Obj(Box(0., .5, .5, 1.))]

    mask = metrics.heuristic_baseline_masks([Scene()])[0]
    assert mask.shape == (8, 8) and mask.sum() == 16
    assert mask[4:, 4:].all()


def test_heuristic_baseline_on_generated_scenes(scenes):
    masks = metrics.heuristic_baseline_masks(scenes)
    assert len(masks) == len(scenes)
    assert 0. <= metrics.oiou(list(zip(masks, [s.target_mask for s in scenes]))) <= 1.


def test_precision_is_monotone_on_random_corpora(rng):
    thresholds = (.1, .3, .5, .7, .9)
    for _ in range(200):
        pairs = [(rng.uniform(size=(5, 5)) > rng.uniform(), rng.uniform(size=(5, 5)) > .5)
                 for _ in range(int(rng.integers(1, 8)))]
        values = [metrics.precision_at(pairs, thresholds)[t] for t in thresholds]
        assert all(b <= a for a, b in zip(values, values[1:]))
        inter = sum(np.count_nonzero(p & g) for p, g in pairs)
        union = sum(np.count_nonzero(p | g) for p, g in pairs)
        assert metrics.oiou(pairs) == (inter / union if union else 1.)
