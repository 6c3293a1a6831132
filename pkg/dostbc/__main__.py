# dostbc/__main__.py — `python -m dostbc`
import sys

from .cli import main

sys.exit(main())
