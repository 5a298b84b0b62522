"""Corpus loading, filtering and ranking module."""
