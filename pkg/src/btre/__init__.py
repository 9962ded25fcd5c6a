"""Bradley-Terry round-robin tournaments with random strengths."""

__version__ = "0.1.0"
