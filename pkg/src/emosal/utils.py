"""Small shared helpers: seed derivation and deterministic rounding."""

from __future__ import annotations

import hashlib
import math


def derive_seed(base_seed: int, *labels: str) -> int:
    """Derive a component seed from a base seed and a chain of labels.

    All randomness in the package flows from one seed through this function:
    the labels name the consumer (e.g. ``("train", "shuffle", "3")``), so two
    components can never share a stream. Hash-based, so it is stable across
    processes and platforms (unlike builtin ``hash``).
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(int(base_seed).to_bytes(8, "little", signed=False))
    for label in labels:
        h.update(b"\x1f")
        h.update(label.encode("utf-8"))
    return int.from_bytes(h.digest(), "little")


def round_half_up(x: float) -> int:
    """Round with halves going up (2.5 -> 3), independent of banker's rounding."""
    return int(math.floor(x + 0.5))
