"""
Test suite for Chronomaly forecast library.
"""
