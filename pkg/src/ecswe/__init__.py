"""Energy-conserving compatible finite element rotating shallow water solver."""

__version__ = "0.1.0"
