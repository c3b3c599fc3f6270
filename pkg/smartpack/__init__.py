"""Closed-loop digital twin of battery-free smart food packaging."""

__version__ = "0.1.1"
