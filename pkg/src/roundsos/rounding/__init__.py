"""Floating-point rounding model and error-product merging."""
