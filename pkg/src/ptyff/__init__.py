"""Ptychographic reconstruction with a learned one-shot fast-forward step."""

__version__ = "0.1.0"
