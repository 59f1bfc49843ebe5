import sys

from ftbn.cli import main

sys.exit(main())
