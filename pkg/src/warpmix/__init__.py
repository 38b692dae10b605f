"""Bayesian curve registration for two-feature functional mixed-membership models."""

__version__ = "0.1.0"
