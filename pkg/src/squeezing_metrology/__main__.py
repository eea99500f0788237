#!/usr/bin/env python3
"""
Spin-squeezing metrology main entry point.
"""

from .cli import main

if __name__ == "__main__":
    main()
