"""Shared exception types.

Argument validation uses plain ``ValueError``; the classes here mark the two
failure modes that callers are expected to branch on: a request that exceeds
a configured resource cap, and a sieve cache file that cannot be trusted.
"""


class CapacityError(Exception):
    """A request exceeds a configured memory or iteration cap."""


class SieveCacheError(Exception):
    """A sieve cache file is missing, corrupted, or has the wrong shape."""
