"""Evaluation statistics."""
