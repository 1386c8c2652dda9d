from pcan.info import __version__
