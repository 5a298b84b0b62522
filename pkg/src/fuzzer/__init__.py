"""Constraint-guided greybox fuzzing."""
