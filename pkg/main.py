#!/usr/bin/env python3
"""
SplitReg - ensembles of sparse and diverse linear models.
Main entry point for the command-line interface.
"""

import sys
from pathlib import Path

# Add src to Python path
sys.path.insert(0, str(Path(__file__).parent / "src"))

from cli.interface import cli
from dotenv import load_dotenv


def main():
    """Main entry point for SplitReg."""
    # Load environment variables
    load_dotenv()

    cli()


if __name__ == "__main__":
    main()
