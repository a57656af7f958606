"""Tools for a paraconsistent Goedel modal logic over finitely branching crisp frames."""

__version__ = "0.1.0"
