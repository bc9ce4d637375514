import sys

from phsysid.main import main

sys.exit(main())
