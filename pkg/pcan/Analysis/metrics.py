# Defines the segmentation metrics: overall IoU, mean IoU, precision and length buckets
#
# Copyright (c) 2026, pcan developers and contributors


import numpy as np

from pcan.Util.exceptions import ShapeError
from pcan.Util.image_util import box_filled_mask


__all__ = ['PRECISION_THRESHOLDS', 'LENGTH_BUCKETS', 'bucket_label', 'pair_counts',
           'per_pair_iou', 'oiou', 'miou', 'precision_at', 'bucketed_iou',
           'heuristic_baseline_masks']


PRECISION_THRESHOLDS = (0.5, 0.6, 0.7, 0.8, 0.9)

# (low, high) inclusive word-count ranges, high None means unbounded
LENGTH_BUCKETS = ((1, 2), (3, 3), (4, 5), (6, None))


def bucket_label(bucket):
    low, high = bucket
    if high is None:
        return f"{low}+"
    if high == low:
        return str(low)
    return f"{low}-{high}"


def pair_counts(pairs):
    """Intersection and union pixel counts of every (pred, gt) pair.

    :param pairs: sequence of (pred_mask, gt_mask) binary arrays
    :return: two int64 arrays of shape (len(pairs),)
    """
    inter = np.zeros(len(pairs), dtype=np.int64)
    union = np.zeros(len(pairs), dtype=np.int64)
    for i, (pred, gt) in enumerate(pairs):
        pred, gt = np.asarray(pred, dtype=bool), np.asarray(gt, dtype=bool)
        if pred.shape != gt.shape:
            raise ShapeError(f"Pair {i}: prediction {pred.shape} and ground truth {gt.shape} differ")
        inter[i] = np.count_nonzero(pred & gt)
        union[i] = np.count_nonzero(pred | gt)
    return inter, union


def _ratio(inter, union):
    # an empty union means both masks are empty: perfect agreement
    return np.where(union > 0, inter / np.maximum(union, 1), 1.)


def per_pair_iou(pairs):
    return _ratio(*pair_counts(pairs))


def oiou(pairs):
    """Total intersection over total union of a corpus; 1.0 when the union is empty."""
    inter, union = pair_counts(pairs)
    return float(_ratio(inter.sum(), union.sum()))


def miou(pairs):
    if len(pairs) == 0:
        return 1.
    return float(np.mean(per_pair_iou(pairs)))


def precision_at(pairs, thresholds=PRECISION_THRESHOLDS):
    """Fraction of pairs whose IoU is strictly above each threshold.

    :return: dict threshold -> fraction
    """
    ious = per_pair_iou(pairs)
    result = {}
    for t in thresholds:
        if not 0. < t < 1.:
            raise ValueError(f"Precision threshold {t} outside (0, 1)")
        result[t] = float(np.mean(ious > t)) if len(ious) else 0.
    return result


def _find_bucket(length, buckets):
    for bucket in buckets:
        low, high = bucket
        if length >= low and (high is None or length <= high):
            return bucket
    raise ValueError(f"Expression length {length} falls outside all buckets {buckets}")


def bucketed_iou(lengths, pairs, buckets=LENGTH_BUCKETS):
    """oIoU computed independently inside every expression-length bucket.

    :param lengths: expression length (in words) of every pair
    :param pairs: sequence of (pred_mask, gt_mask)
    :param buckets: disjoint (low, high) inclusive ranges
    :return: dict label -> {'oiou', 'count', 'intersection', 'union'}
    """
    if len(lengths) != len(pairs):
        raise ValueError(f"{len(lengths)} lengths for {len(pairs)} pairs")
    inter, union = pair_counts(pairs)
    members = {bucket: [] for bucket in buckets}
    for i, length in enumerate(lengths):
        members[_find_bucket(length, buckets)].append(i)
    result = {}
    for bucket in buckets:
        idx = np.asarray(members[bucket], dtype=int)
        i_sum, u_sum = int(inter[idx].sum()), int(union[idx].sum())
        result[bucket_label(bucket)] = {'oiou': float(_ratio(i_sum, u_sum)), 'count': len(idx),
                                        'intersection': i_sum, 'union': u_sum}
    return result


def heuristic_baseline_masks(scenes):
    """Box-filled mask of the largest object of every scene.

    Ties on area go to the first object in scene order.
    """
    masks = []
    for scene in scenes:
        areas = [obj.box.area for obj in scene.objects]
        largest = scene.objects[int(np.argmax(areas))]
        masks.append(box_filled_mask(largest.box, scene.height, scene.width))
    return masks
