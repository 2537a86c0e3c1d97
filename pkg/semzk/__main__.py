import sys

from semzk.main import main

sys.exit(main())
