"""Engagement-maximising dynamic disclosure: solvers, simulator and verifier."""

__version__ = "0.1.0"
