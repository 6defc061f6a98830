import sys

from toric_bounds.main import main

if __name__ == "__main__":
    sys.exit(main())
