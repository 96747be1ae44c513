"""covertauction: robust spectrum auctions for covert JRC links."""

__version__ = "0.1.0"
