import sys

from spdgeo.main import main

sys.exit(main())
