import sys

from mesofluct.cli import main

sys.exit(main())
