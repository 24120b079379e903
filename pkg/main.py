"""Main entry file"""

import sys
from frechet_geo.cli import main

if __name__ == "__main__":
    sys.exit(main() or 0)
