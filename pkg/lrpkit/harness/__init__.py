"""Experiment orchestration: configs, replica pools, checkpoints, pipelines and reports."""
