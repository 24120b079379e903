"""Main entry point for Python module"""

from .cli import main

if __name__ == "__main__":
    main()
