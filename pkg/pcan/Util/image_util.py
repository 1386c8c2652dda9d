# Utility functions on images and masks
#
# Copyright (c) 2026, pcan developers and contributors


import numpy as np
import jax.numpy as jnp
from jax import image as jax_image

from pcan.Geometry.box import BoxConvention


__all__ = ['re_size', 'upsample_nearest', 'resize_bilinear', 'box_filled_mask',
           'binarize']


def re_size(image, factor=1):
    """
    re-sizes image with nx x ny to nx/factor x ny/factor by block averaging
    :param image: 2d image with shape (nx,ny)
    :param factor: integer >=1
    :return: image of shape (nx/factor, ny/factor)
    """
    if factor < 1:
        raise ValueError('scaling factor in re-sizing %s < 1' % factor)
    elif factor == 1:
        return image
    f = int(factor)
    nx, ny = np.shape(image)
    if nx % f == 0 and ny % f == 0:
        return image.reshape([nx // f, f, ny // f, f]).mean(3).mean(1)
    else:
        raise ValueError("scaling with factor %s is not possible with grid size %s, %s" % (f, nx, ny))


def upsample_nearest(feature_map, factor=2):
    """Nearest-neighbour upsampling of an (H, W, C) map."""
    return jnp.repeat(jnp.repeat(feature_map, factor, axis=0), factor, axis=1)


def resize_bilinear(logits, height, width):
    """Bilinear resize of a 2-D map (e.g. stride-8 mask logits) to (height, width)."""
    return jax_image.resize(logits, (height, width), method='bilinear')


def box_filled_mask(box, height, width):
    """Binary mask of the pixels whose centre lies inside a normalized box."""
    x1, y1, x2, y2 = box.to(BoxConvention.CORNER_NORMALIZED).corners()
    px = (np.arange(width) + 0.5) / width
    py = (np.arange(height) + 0.5) / height
    inside_x = (px >= x1) & (px <= x2)
    inside_y = (py >= y1) & (py <= y2)
    return inside_y[:, None] & inside_x[None, :]


def binarize(logits, threshold=0.5):
    """Binary mask from logits, thresholding the sigmoid probability."""
    # sigmoid(x) > t  <=>  x > logit(t)
    return np.asarray(logits) > np.log(threshold / (1. - threshold))
