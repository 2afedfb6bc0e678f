"""Experiment orchestration: configs, dataset files, evaluation, reports."""
