"""Channel-adaptive rate and relay selection toolkit for 802.11b ad hoc networks."""

__version__ = "0.1.0"
