"""Spectral measures of Brown-Thompson group elements via strand diagrams."""

__version__ = "1.0.0"
