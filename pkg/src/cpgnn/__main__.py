import sys

from cpgnn.cli import entry

sys.exit(entry())
