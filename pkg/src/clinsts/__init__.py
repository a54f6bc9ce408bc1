"""Clinical sentence-pair similarity toolkit."""

__version__ = "0.1.0"
