import sys

from hcm.cli import main

sys.exit(main())
