# Utility functions for figures
#
# Copyright (c) 2026, pcan developers and contributors


import numpy as np
import matplotlib.pyplot as plt
from mpl_toolkits.axes_grid1 import make_axes_locatable


__all__ = ['plot_loss_history', 'nice_colorbar', 'moving_average']


def moving_average(values, window=5):
    """Trailing moving average; the first window-1 entries average what is available."""
    values = np.asarray(values, dtype=float)
    if len(values) == 0:
        return values
    csum = np.cumsum(values)
    out = np.empty_like(values)
    for i in range(len(values)):
        start = max(0, i - window + 1)
        out[i] = (csum[i] - (csum[start - 1] if start > 0 else 0.)) / (i - start + 1)
    return out


def plot_loss_history(loss_history, components=None, window=5):
    """Loss curve with its moving average, and optionally the loss components.

    :param loss_history: per-epoch (or per-step) total loss
    :param components: optional dict name -> history of the same length
    """
    n_panels = 1 if not components else 2
    fig, axes = plt.subplots(1, n_panels, figsize=(5 * n_panels, 4), squeeze=False)
    ax = axes[0, 0]
    x = np.arange(len(loss_history))
    ax.plot(x, loss_history, color='0.6', label="loss")
    ax.plot(x, moving_average(loss_history, window), color='tab:blue',
            label=f"{window}-point average")
    ax.set_ylabel("Loss")
    ax.set_xlabel("Epoch")
    ax.legend(loc='upper right')
    if components:
        ax = axes[0, 1]
        for name, history in components.items():
            ax.plot(np.arange(len(history)), history, label=name)
        ax.set_yscale('log')
        ax.set_xlabel("Epoch")
        ax.set_ylabel("Component")
        ax.legend(loc='upper right', fontsize=7)
    fig.tight_layout()
    return fig


def nice_colorbar(mappable, position='right', pad=0.1, size='5%', label=None, fontsize=12,
                  colorbar_kwargs={}):
    ax = mappable.axes
    divider = make_axes_locatable(ax)
    cax = divider.append_axes(position, size=size, pad=pad)
    cb = plt.colorbar(mappable, cax=cax, **colorbar_kwargs)
    if label is not None:
        cb.set_label(label, fontsize=fontsize)
    if position == 'top':
        cax.xaxis.set_ticks_position('top')
    return cb
