#!/usr/bin/env python3
"""
lfsgeo - Main Entry Point
"""

import sys
from pathlib import Path

# Add the project root to Python path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))


def main() -> int:
    """Run the lfsgeo command line with the process arguments."""
    from src.cli import main as cli_main

    return cli_main(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
