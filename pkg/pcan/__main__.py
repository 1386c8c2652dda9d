import sys

from pcan.Harness.cli import main

if __name__ == '__main__':
    sys.exit(main())
