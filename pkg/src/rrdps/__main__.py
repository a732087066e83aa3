import sys

from rrdps.cli import main

sys.exit(main())
