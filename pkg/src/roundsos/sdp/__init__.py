"""Semidefinite programs: problem types, embedded solver and SDPA files."""
