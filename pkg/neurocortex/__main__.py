"""Entry point for the neurocortex simulator.

This module runs the command-line interface from neurocortex.harness.cli.
"""

import sys

from neurocortex.harness.cli import main

if __name__ == "__main__":
    sys.exit(main())
