"""Discrete-event simulator and control plane for input-aware serverless resource orchestration."""

__version__ = "0.1.0"
