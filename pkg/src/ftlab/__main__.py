import sys

from .harness import cli_entry

sys.exit(cli_entry())
