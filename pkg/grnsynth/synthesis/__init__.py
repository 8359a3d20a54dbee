"""
GRN-conditioned synthetic expression generation
"""
