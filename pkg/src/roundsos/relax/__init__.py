"""SOS relaxations of polynomial optimization problems."""
