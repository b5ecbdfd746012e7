"""parishrec: post-recognition extraction and validation for parish registers."""

__version__ = "0.1.0"
