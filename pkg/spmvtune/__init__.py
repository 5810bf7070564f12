"""spmvtune - format-adaptive SpMV autotuning toolkit."""

__version__ = "1.0.0"
__author__ = "spmvtune Team"
