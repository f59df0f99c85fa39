"""roundsos tests."""
