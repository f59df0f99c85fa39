"""Roundoff error bounds: decomposition, relaxations, lifting, conditionals and subdivision."""
