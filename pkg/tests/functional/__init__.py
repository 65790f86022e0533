"""
Functional tests for head avatar fields.
"""
