"""Robot mapping by boundary tracing and boundary-anchored path plans."""

__version__ = "0.1.0"
