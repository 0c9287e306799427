"""mdlab: linear-code multiple-descriptions coding laboratory."""

__version__ = "0.1.0"
