"""Pipeline orchestration: configuration, logging, errors, run manifest and CLI."""
