import sys

from scbicm.cli import main

sys.exit(main())
