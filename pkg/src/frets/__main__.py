import sys

from frets.cli import main

sys.exit(main())
