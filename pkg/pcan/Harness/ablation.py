# Defines the ablation axes and runs their rows with a shared seed
#
# Copyright (c) 2026, pcan developers and contributors


import logging
import os
from dataclasses import replace

from pcan.Analysis.report import render_table
from pcan.Harness import runner
from pcan.Harness.config import AblationSwitches
from pcan.Util.exceptions import ConfigurationError
from pcan.Util.util import write_json


__all__ = ['AXES', 'ablation_rows', 'ablate']


logger = logging.getLogger(__name__)


def _components(config):
    s = AblationSwitches
    return [('baseline', s(use_clum=False, use_pam=False, use_contrastive_loss=False)),
            ('CLUM w/o PAM&CL', s(use_clum=True, use_pam=False, use_contrastive_loss=False)),
            ('CLUM w/o PAM', s(use_clum=True, use_pam=False, use_contrastive_loss=True)),
            ('CLUM w/o CL', s(use_clum=True, use_pam=True, use_contrastive_loss=False)),
            ('full', s())]


def _prior_type(config):
    rows = [('baseline', AblationSwitches(use_clum=False, use_pam=False, use_contrastive_loss=False))]
    for name in ('gt+unconstrained-random', 'gt+conditional-random', 'gt+oracle-detector',
                 'gt+all-objects+conditional', 'gt+oracle+conditional'):
        rows.append((name, AblationSwitches(prior_source=name)))
    return rows


AXES = ('components', 'prior_type', 'k_boxes', 'g_groups')

K_BOXES = (2, 4, 6, 8)
G_GROUPS = (1, 2, 3, 4)


def ablation_rows(config, axis):
    """(row name, RunConfig) pairs of one ablation axis.

    Every row keeps the data section and the seed of `config`.
    k_boxes counts the boxes of a group, positive included.
    """
    if axis == 'components':
        return [(name, replace(config, ablation=switches)) for name, switches in _components(config)]
    if axis == 'prior_type':
        return [(name, replace(config, ablation=switches)) for name, switches in _prior_type(config)]
    if axis == 'k_boxes':
        return [(f"K={k}", replace(config, ablation=AblationSwitches(),
                                   pam=replace(config.pam, k_neg=k - 1)))
                for k in K_BOXES]
    if axis == 'g_groups':
        return [(f"G={g}", replace(config, ablation=AblationSwitches(),
                                   pam=replace(config.pam, groups=g)))
                for g in G_GROUPS]
    raise ConfigurationError(f"Ablation axis '{axis}' is not supported, choose among {AXES}")


def ablate(config, axis, progress_bar=False, write_outputs=True):
    """Train and evaluate every row of an ablation axis on the same scenes.

    :return: list of EvalReport named after the rows
    """
    rows = ablation_rows(config, axis)
    scenes = runner.load_scenes(config)
    reports = []
    for i, (name, row_config) in enumerate(rows):
        row_config = replace(row_config, output_dir=os.path.join(config.output_dir, axis, f"{i:02d}"))
        logger.info("ablation %s: row %d/%d '%s'", axis, i + 1, len(rows), name)
        outcome = runner.train(row_config, scenes=scenes, progress_bar=progress_bar,
                               write_outputs=write_outputs)
        reports.append(replace(outcome.report, name=name))
    if write_outputs:
        out_dir = os.path.join(config.output_dir, axis)
        os.makedirs(out_dir, exist_ok=True)
        write_json({'axis': axis, 'rows': [r.to_dict() for r in reports]},
                   os.path.join(out_dir, 'metrics.json'))
        with open(os.path.join(out_dir, 'report.txt'), 'w') as f:
            f.write(render_table(reports))
    return reports
