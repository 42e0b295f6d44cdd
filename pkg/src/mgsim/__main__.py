import sys

from mgsim.cli import main

sys.exit(main())
