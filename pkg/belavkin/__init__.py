"""Minimum-error discrimination of pure-state ensembles with Belavkin weighted square-root measurements."""

__version__ = "0.1.0"
