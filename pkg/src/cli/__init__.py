"""
CLI package for SplitReg.
"""
