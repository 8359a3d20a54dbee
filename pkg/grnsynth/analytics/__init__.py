"""
Analytics modules for preprocessing, fidelity metrics and cell-type annotation
"""
