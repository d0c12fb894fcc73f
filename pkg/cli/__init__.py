# Command-line front end for tumordde
__version__ = "1.0.0"
