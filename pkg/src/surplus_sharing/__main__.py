import sys

from surplus_sharing.cli import main

if __name__ == '__main__':
    sys.exit(main())
