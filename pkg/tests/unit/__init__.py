"""
Unit tests for head avatar fields.
"""
