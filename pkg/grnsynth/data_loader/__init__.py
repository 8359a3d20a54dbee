"""
Data loader modules for expression matrices and GRN files
"""
