"""Flickering multi-armed bandits: availability-graph environments, the two-phase lazy-walk learner, and diagnostics."""

__version__ = "0.1.0"
