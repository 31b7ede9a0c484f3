import sys

from mavland.cli import main

sys.exit(main())
