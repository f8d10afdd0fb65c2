"""
Data layer for readers and writers.
"""
