"""Multi-agent, multi-scale simulator of instrument-side experiment operations."""

__version__ = "0.1.0"
