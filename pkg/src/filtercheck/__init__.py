"""Input validity, cross-solution consistency and benchmark assembly."""
