"""Deterministic seed fan-out.

One master seed drives the whole pipeline; each stage derives its own seed
by hashing the master seed with a fixed stage label.  sha256 keeps the
derivation stable across platforms and Python versions (the builtin hash()
is salted and must not be used here).
"""

from __future__ import annotations

import hashlib


def derive_seed(master: int, label: str) -> int:
    """Stage seed in [0, 2^32) from a master seed and a fixed label."""
    digest = hashlib.sha256(f"{master}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")
