"""Maximal covering location with interconnected facilities."""
