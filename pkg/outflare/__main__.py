import sys

from outflare.main import main

sys.exit(main())
