"""Small shared helpers: seed derivation and config hashing."""

from __future__ import annotations

import hashlib
import json


def derive_seed(base_seed: int, label: str) -> int:
    """Stable 64-bit sub-seed for a pipeline stage or evaluation cell."""
    digest = hashlib.sha256(f"{base_seed}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def config_hash(doc) -> str:
    """Short content hash of a JSON-serializable config document."""
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]
