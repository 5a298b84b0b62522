"""Constraint reasoning, checker implementation and LLM providers."""
