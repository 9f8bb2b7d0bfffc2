"""Exact-Gini CART surrogate trees, closed-form ordering analysis, sample forging and auditing."""

__version__ = "0.1.0"
