"""Online metric embeddings and online matching with recourse."""

__version__ = "0.1.0"
