"""Deterministic, named random streams.

Every source of randomness in the pipeline is derived from a single user seed
plus a tuple of stream labels (strings or ints). Deriving the stream for
epoch k from ``(seed, "epoch", k)`` makes training resumable: a run restarted
from a checkpoint replays exactly the randomness of an uninterrupted run.
"""

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _as_entropy(part):
    if isinstance(part, (bool,)):
        raise TypeError("bool is not a valid stream label")
    if isinstance(part, (int, np.integer)):
        return int(part) & _MASK64
    if isinstance(part, str):
        digest = hashlib.sha256(part.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "little")
    raise TypeError(f"stream labels must be int or str, got {type(part).__name__}")


def stream(*parts) -> np.random.Generator:
    """Return a Generator uniquely determined by the label tuple."""
    if not parts:
        raise ValueError("at least one stream label is required")
    entropy = [_as_entropy(p) for p in parts]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def stream_digest(*parts) -> str:
    """Stable hex digest identifying a stream; stored in checkpoints."""
    entropy = [_as_entropy(p) for p in parts]
    raw = b"".join(e.to_bytes(8, "little") for e in entropy)
    return hashlib.sha256(raw).hexdigest()
