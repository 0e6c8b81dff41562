"""Ray-traced simulation of imaging MIMO visible light links."""

__version__ = "0.1.0"
