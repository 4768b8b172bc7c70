"""Allow ``python -m vibelab``."""

import sys

from .cli import main

sys.exit(main())
