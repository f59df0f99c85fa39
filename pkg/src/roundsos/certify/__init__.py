"""Rational SOS certificates: extraction, checking and text form."""
