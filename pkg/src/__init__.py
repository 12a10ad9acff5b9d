"""
SplitReg: ensembles of sparse and diverse linear models.
"""

__version__ = "1.0.0"
__author__ = "SplitReg Team"
