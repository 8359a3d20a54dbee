"""
GRN-conditioned synthetic single-cell expression toolkit
"""

__version__ = "0.3.0"
