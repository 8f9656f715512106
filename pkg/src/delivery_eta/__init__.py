"""Delivery-time regression toolkit and experiment runner."""

__version__ = "0.1.0"
