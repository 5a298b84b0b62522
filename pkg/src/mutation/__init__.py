"""Mutator synthesis, plugin protocol and built-in mutators."""
