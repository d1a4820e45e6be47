"""Directional opinion strength on interrelationships from interactive
language features and directed structural balance."""

__version__ = "0.1.0"
