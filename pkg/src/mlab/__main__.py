import sys

from mlab.experiments.cli import main

sys.exit(main())
