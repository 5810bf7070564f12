#!/usr/bin/env python3
"""
spmvtune - format-adaptive SpMV autotuning toolkit.
"""

import sys

from spmvtune.main import main

if __name__ == "__main__":
    sys.exit(main())
