import sys

from awae.cli import main

sys.exit(main())
