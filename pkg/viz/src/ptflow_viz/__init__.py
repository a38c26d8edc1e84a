"""Figure generation for solver run directories (CSV post-processing)."""

__version__ = "0.1.0"
