"""
Visualization modules for charts and reports
"""
