"""Stratified synthetic benchmark: generation, runs, statistics and figure data."""
