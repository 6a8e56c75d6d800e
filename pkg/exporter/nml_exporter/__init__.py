"""Fixture exporter package."""
