"""
Utilities package for SplitReg: CSV ingestion, artifacts, experiment configs and storage.
"""
