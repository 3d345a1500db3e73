"""Module entry point so `python -m streamify` works like the console script."""

import sys

from .cli import main

sys.exit(main())
