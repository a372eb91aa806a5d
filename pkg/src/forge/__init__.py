"""Counterexample and determining-set toolkit for exchangeable partial sums."""

__version__ = "0.1.0"
