"""Numerical differential geometry for extrinsic hyperspheres and special Killing forms."""

__version__ = "0.1.0"
