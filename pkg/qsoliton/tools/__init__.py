"""Verification checks, geodesic probes, volume growth and the check runner."""
