"""Simulation, experiments and command-line tooling around the localization core."""
