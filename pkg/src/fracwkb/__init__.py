"""Canonical and WKB treatment of second-order fractional-labelled Lagrangians."""

__version__ = "0.1.0"
