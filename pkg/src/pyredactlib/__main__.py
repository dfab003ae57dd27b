import sys

from pyredactlib.cli import main

sys.exit(main())
