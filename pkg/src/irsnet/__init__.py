"""Analytic and Monte-Carlo engines for LoS-state transitions and handover
probability in IRS-aided cellular networks with line blockages."""

__version__ = "0.1.0"
