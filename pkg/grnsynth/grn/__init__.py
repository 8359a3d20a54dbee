"""
Gene regulatory network modules: graph core and statistical inference
"""
