"""Dual-autoencoder zero-day threat detection over network flow telemetry."""

__version__ = "0.1.0"

MODEL_FORMAT_VERSION = 1
REPORT_FORMAT_VERSION = 1
