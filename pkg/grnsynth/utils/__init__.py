"""
Utility modules for configuration, logging, errors and seeding
"""
