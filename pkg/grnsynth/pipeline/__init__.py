"""
Experiment pipeline: run configuration, orchestration and manifests
"""
