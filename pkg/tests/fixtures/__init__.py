"""
Test fixtures for the head avatar test suite.
"""
