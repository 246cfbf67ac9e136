"""DNN post-processing error reduction for Trotterized spin-chain dynamics."""

__version__ = "0.1.0"
