"""Topological complexity measurement for datasets and dense-network layers."""

__version__ = "0.1.0"
