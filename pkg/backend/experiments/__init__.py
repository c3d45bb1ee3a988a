"""Scripted experiments: solver timing, noise sweeps, heatmaps, rates and trajectory runs."""
