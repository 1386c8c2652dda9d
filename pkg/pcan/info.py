"""PACKAGE INFO

This module provides some basic information about the package.

"""

# Set the package release version
version_info = (0, 1, 0)
__version__ = '.'.join(str(c) for c in version_info)

# Set the package details
__author__ = 'pcan developers'
__email__ = ''
__year__ = '2026'
__url__ = ''
__description__ = ('Desk-scale position-aware contrastive alignment network '
                   'for referring image segmentation, in JAX')
__python__ = '>=3.9'
__requires__ = ['numpy', 'scipy', 'jax', 'jaxlib', 'optax',
                'matplotlib', 'tqdm']  # Package dependencies

# Default package properties
__license__ = 'MIT'
__about__ = ('{} Author: {}, Email: {}, Year: {}, {}'
             ''.format(__name__, __author__, __email__, __year__,
                       __description__))
__setup_requires__ = ['pytest-runner', ]
__tests_require__ = ['pytest', 'pytest-cov']
