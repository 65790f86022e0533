"""
Core components of the head avatar pipeline.
"""

__all__: list[str] = []
