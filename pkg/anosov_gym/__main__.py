import sys

from anosov_gym.cli import main

if __name__ == "__main__":
    sys.exit(main())
