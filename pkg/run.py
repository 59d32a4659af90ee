#!/usr/bin/env python3
"""
File: run.py
Path: run.py
Purpose: Command-line entry point for trajsim
Author: dnoice
Version: 1.0.0
Created: 2026-10-17
Updated: 2026-10-17

Usage:
    python run.py gen-scenario head_on exports/head_on.json --seed 3
    python run.py simulate exports/head_on.json --K 4 --T 40 --seed 7 --plot-data
    python run.py metrics exports/head_on.json exports/rollouts.json --pdf
    python run.py inspect exports/head_on.json --J 8
"""

import sys


def main():
    """Main entry point for the application."""
    try:
        from trajsim.cli import main as cli_main
    except ImportError as e:
        print(f"Error importing trajsim package: {e}")
        print("\nMake sure you're running from the project root directory.")
        print("If you haven't set up the project yet, run: ./setup.sh")
        sys.exit(1)

    try:
        sys.exit(cli_main(sys.argv[1:]))
    except KeyboardInterrupt:
        print("\n\nInterrupted.")
        sys.exit(130)


if __name__ == '__main__':
    main()
