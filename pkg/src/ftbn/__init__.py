"""Fault-tree to Bayesian-network dependability analysis."""

__version__ = "0.1.0"
