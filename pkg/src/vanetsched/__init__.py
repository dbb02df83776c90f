"""Schedulable degree-distribution simulator for localized vehicular networks."""

__version__ = "0.1.0"
