"""
Deformer variants.

Each subdirectory holds one fine-deformation variant with its
``deformer.py``, ``config.yaml`` and ``README.md``.
"""
