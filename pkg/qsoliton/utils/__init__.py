"""Parsing, sampling and export helpers."""
