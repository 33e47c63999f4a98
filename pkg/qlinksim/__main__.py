"""Allow running as ``python -m qlinksim``."""

from .cli import main

if __name__ == '__main__':
    main()
