"""Graph adaptive semantic transfer for cross-domain sentiment classification."""

__version__ = "0.1.0"
