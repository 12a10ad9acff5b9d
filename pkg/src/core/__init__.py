"""
Core package for SplitReg: standardization, solver, tuning, ensembling and simulation.
"""

__version__ = "1.0.0"
