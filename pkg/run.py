"""
Main entry point for the command-line tools

Usage:
    python run.py bdm --model exponential --n 6 --mle 1.2 --method ho --theta0 0.9
    python run.py table --out table.csv
"""
import sys
from app.cli import main

if __name__ == "__main__":
    sys.exit(main())
