"""Correlative sparsity analysis."""
