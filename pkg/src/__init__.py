"""WEDGE package initialization."""
