# culture.py
# CultureCore entry point: survey -> cultural association -> teams.
#
#   python culture.py synth --out demo
#   python culture.py run --config demo/config.json

import sys

from nexus.pipeline.cli import main


if __name__ == "__main__":
    sys.exit(main())
