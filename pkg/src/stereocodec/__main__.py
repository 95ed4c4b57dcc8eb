"""Allow ``python -m stereocodec``."""

import sys

from stereocodec.cli import main

if __name__ == "__main__":
    sys.exit(main())
