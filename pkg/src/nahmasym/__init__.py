"""Radial asymptotics of Nahm sums at roots of unity."""

__version__ = "0.1.0"
