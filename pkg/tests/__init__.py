"""
Test package for head avatar fields.
"""
