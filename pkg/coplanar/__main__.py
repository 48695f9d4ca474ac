import sys

from coplanar.evaluation.cli import main

sys.exit(main())
