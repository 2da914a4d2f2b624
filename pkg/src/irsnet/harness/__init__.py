"""Experiment harness: sweeps, figure recipes, CSV emission, CLI."""
