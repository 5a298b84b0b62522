"""Shared counters and duration helpers."""
