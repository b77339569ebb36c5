"""Multilabel prototype generation toolkit for kNN classification."""

__version__ = "0.1.0"
