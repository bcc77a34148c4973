import sys

from fraccos.cli import main

sys.exit(main())
