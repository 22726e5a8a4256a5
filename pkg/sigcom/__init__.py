"""Signature Communities - community detection on time-series panels via path signatures."""

__version__ = "0.1.0"
__app_name__ = "sigcom"
