"""
Experiment orchestration: datasets, training, evaluation and sweeps
"""
