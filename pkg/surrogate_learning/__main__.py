"""Entry point for ``python -m surrogate_learning``."""

import sys

from .cli import main

sys.exit(main())
