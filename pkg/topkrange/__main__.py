import sys

from topkrange.bench import main

sys.exit(main())
