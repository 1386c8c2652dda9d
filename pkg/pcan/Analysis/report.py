# Defines the evaluation report, its JSON schema and its text rendering
#
# Copyright (c) 2026, pcan developers and contributors


import json
import logging
from dataclasses import dataclass, field

from pcan.Analysis import metrics
from pcan.Util.exceptions import FormatError


__all__ = ['SCHEMA_VERSION', 'EvalReport', 'evaluate_pairs', 'render_table']


logger = logging.getLogger(__name__)


SCHEMA_VERSION = 1


@dataclass
class EvalReport(object):
    """Metrics of one evaluated corpus.

    :param precision: threshold -> fraction of pairs with IoU above it
    :param buckets: length-bucket label -> {'oiou', 'count', 'intersection', 'union'}
    :param empty_union: True when the corpus had no foreground pixel at all,
     in which case oIoU is 1.0 by convention
    """
    name: str
    oiou: float
    miou: float
    precision: dict
    buckets: dict
    num_pairs: int
    empty_union: bool = False
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for key in ('oiou', 'miou'):
            value = getattr(self, key)
            if not 0. <= value <= 1.:
                raise ValueError(f"{key} = {value} outside [0, 1]")
        ordered = [self.precision[t] for t in sorted(self.precision)]
        if any(b > a for a, b in zip(ordered, ordered[1:])):
            raise ValueError("Precision must not increase with the threshold")

    def to_dict(self):
        return {'schema_version': SCHEMA_VERSION,
                'name': self.name,
                'oiou': self.oiou,
                'miou': self.miou,
                'precision': {f"{t:.2f}": v for t, v in sorted(self.precision.items())},
                'buckets': self.buckets,
                'num_pairs': self.num_pairs,
                'empty_union': self.empty_union,
                'extra': self.extra}

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        version = d.get('schema_version')
        if version != SCHEMA_VERSION:
            raise FormatError(f"Report schema version {version} is not supported "
                              f"(expected {SCHEMA_VERSION})")
        try:
            return cls(name=d['name'], oiou=d['oiou'], miou=d['miou'],
                       precision={float(t): v for t, v in d['precision'].items()},
                       buckets=d['buckets'], num_pairs=d['num_pairs'],
                       empty_union=d.get('empty_union', False), extra=d.get('extra', {}))
        except KeyError as e:
            raise FormatError(f"Report lacks the field {e}") from None

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def evaluate_pairs(name, pairs, lengths, thresholds=metrics.PRECISION_THRESHOLDS,
                   buckets=metrics.LENGTH_BUCKETS, extra=None):
    """Compute every metric of a corpus of (pred_mask, gt_mask) pairs.

    :param lengths: expression length of every pair, used for the buckets
    :return: EvalReport
    """
    inter, union = metrics.pair_counts(pairs)
    empty = int(union.sum()) == 0
    if empty:
        logger.warning("corpus '%s' has an empty total union, oIoU reported as 1.0", name)
    return EvalReport(name=name,
                      oiou=metrics.oiou(pairs),
                      miou=metrics.miou(pairs),
                      precision=metrics.precision_at(pairs, thresholds),
                      buckets=metrics.bucketed_iou(lengths, pairs, buckets),
                      num_pairs=len(pairs),
                      empty_union=empty,
                      extra={} if extra is None else dict(extra))


def render_table(reports, percent=True):
    """Aligned-column text table, one row per report.

    Columns: Pr@X for every threshold, oIoU, mIoU, then the length buckets.
    """
    if not reports:
        return ''
    scale = 100. if percent else 1.
    thresholds = sorted(reports[0].precision)
    bucket_labels = list(reports[0].buckets)
    header = (['Method'] + [f"Pr@{t:g}" for t in thresholds] + ['oIoU', 'mIoU']
              + [f"len {b}" for b in bucket_labels])
    rows = []
    for r in reports:
        cells = [r.name] + [f"{scale * r.precision[t]:.2f}" for t in thresholds]
        cells += [f"{scale * r.oiou:.2f}", f"{scale * r.miou:.2f}"]
        cells += [f"{scale * r.buckets[b]['oiou']:.2f}" if r.buckets[b]['count'] else '-'
                  for b in bucket_labels]
        rows.append(cells)
    widths = [max(len(row[i]) for row in [header] + rows) for i in range(len(header))]

    def line(cells):
        first = cells[0].ljust(widths[0])
        rest = [c.rjust(w) for c, w in zip(cells[1:], widths[1:])]
        return '  '.join([first] + rest)

    sep = '-' * len(line(header))
    out = [line(header), sep] + [line(row) for row in rows]
    if any(r.empty_union for r in reports):
        out.append("(*) empty total union, oIoU set to 1.0")
    return '\n'.join(out) + '\n'
