import sys

from pycloudgen.cli import main

sys.exit(main())
