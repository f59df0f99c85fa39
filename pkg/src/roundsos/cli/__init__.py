"""Command-line front end, sampling oracle and benchmark runner."""
