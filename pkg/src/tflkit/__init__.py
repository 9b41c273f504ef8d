"""Causality-aware fixpoint logic over transition systems with independence."""

__version__ = "0.1.0"
