"""Sequence forecasting with hand-derived recurrent-network gradients and an ARMA benchmark."""

__version__ = "0.1.0"
