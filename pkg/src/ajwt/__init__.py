"""Intent-bound tokens, agent identity checksums and proof-of-possession requests for multi-agent clients."""

__version__ = "0.1.0"
