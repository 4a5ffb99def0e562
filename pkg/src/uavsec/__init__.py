"""Secure UAV-relay downlink simulator: channels, beamforming, secrecy and trajectory learning."""

__version__ = "0.1.0"
