"""Build, execute and measure solution programs."""
