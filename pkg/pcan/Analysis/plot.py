# Class to plot predictions, contrastive groups and training curves
#
# Copyright (c) 2026, pcan developers and contributors


import logging
import os

import numpy as np
import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
from matplotlib.patches import Rectangle
from scipy.special import expit

from pcan.Geometry.box import BoxConvention
from pcan.SynthData.detector import SampleLabel
from pcan.Util.plot_util import plot_loss_history, nice_colorbar


__all__ = ['Plotter', 'overlay_image']


logger = logging.getLogger(__name__)


_LABEL_COLORS = {SampleLabel.POSITIVE: 'lime',
                 SampleLabel.NEGATIVE_DETECTED: 'red',
                 SampleLabel.NEGATIVE_SYNTHETIC: 'salmon'}


def overlay_image(image, mask, color=(1., 0., 0.), alpha=0.5):
    """RGB image with the mask pixels blended towards `color`."""
    image = np.clip(np.asarray(image, dtype=float), 0., 1.)
    mask = np.asarray(mask, dtype=bool)
    out = image.copy()
    out[mask] = (1. - alpha) * image[mask] + alpha * np.asarray(color)
    return out


class Plotter(object):
    """
    Figures of the segmentation results, written as PNG files.
    """

    def __init__(self, base_fontsize=9, dpi=100):
        self.base_fontsize = base_fontsize
        self.dpi = dpi

    def _save(self, fig, path):
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        fig.savefig(path, dpi=self.dpi)
        plt.close(fig)
        logger.debug("wrote %s", path)
        return path

    def save_overlay(self, path, image, pred_mask, gt_mask=None):
        """Prediction in red over the image, ground truth in green when given."""
        out = overlay_image(image, pred_mask, color=(1., 0., 0.))
        if gt_mask is not None:
            out = overlay_image(out, gt_mask, color=(0., 1., 0.), alpha=0.3)
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        plt.imsave(path, out)
        return path

    def prediction_panel(self, path, scene, pred_mask, logits=None):
        """Image, prediction overlay and (optionally) the mask probability."""
        n_cols = 2 if logits is None else 3
        fig, axes = plt.subplots(1, n_cols, figsize=(3 * n_cols, 3.3))
        axes[0].imshow(scene.image)
        axes[0].set_title(scene.expression.text(), fontsize=self.base_fontsize)
        axes[1].imshow(overlay_image(overlay_image(scene.image, scene.target_mask, (0., 1., 0.), 0.3),
                                     pred_mask))
        axes[1].set_title("prediction (red) / target (green)", fontsize=self.base_fontsize)
        if logits is not None:
            im = axes[2].imshow(expit(np.asarray(logits)), vmin=0., vmax=1.,
                                cmap='viridis')
            axes[2].set_title("mask probability", fontsize=self.base_fontsize)
            nice_colorbar(im, position='right', pad=0.05)
        for ax in axes:
            ax.set_xticks([])
            ax.set_yticks([])
        fig.tight_layout()
        return self._save(fig, path)

    def contrastive_groups(self, path, scene, group_set):
        """One panel per contrastive group with its boxes coloured by label."""
        height, width = scene.height, scene.width
        fig, axes = plt.subplots(1, group_set.num_groups,
                                 figsize=(3 * group_set.num_groups, 3.3), squeeze=False)
        for g, group in enumerate(group_set.groups):
            ax = axes[0, g]
            ax.imshow(scene.image)
            for sample in group:
                x1, y1, x2, y2 = sample.box.to(BoxConvention.CORNER_ABSOLUTE, (height, width)).corners()
                # pixel centres sit at integer coordinates in imshow
                ax.add_patch(Rectangle((x1 - 0.5, y1 - 0.5), x2 - x1, y2 - y1, fill=False,
                                       edgecolor=_LABEL_COLORS[sample.label], linewidth=1.2))
            ax.set_title(f"group {g} (positive at {group_set.positive_index[g]})",
                         fontsize=self.base_fontsize)
            ax.set_xticks([])
            ax.set_yticks([])
        fig.suptitle(scene.expression.text(), fontsize=self.base_fontsize)
        fig.tight_layout()
        return self._save(fig, path)

    def loss_curve(self, path, loss_history, components=None):
        return self._save(plot_loss_history(loss_history, components), path)
