"""Deterministic sub-seed derivation.

A single 64-bit run seed drives every stochastic operation. Each operation
derives its own generator seed from (run seed, operation name, item id), so
per-item outputs never depend on execution order or on how many other items
were processed first.
"""

from __future__ import annotations

import hashlib

import numpy as np

_SEP = b"\x1f"


def derive_seed(run_seed: int, *labels: object) -> int:
    """Return a stable 64-bit sub-seed for (run_seed, *labels)."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(run_seed)).encode("ascii"))
    for label in labels:
        h.update(_SEP)
        h.update(str(label).encode("utf-8"))
    return int.from_bytes(h.digest(), "big")


def rng_for(run_seed: int, *labels: object) -> np.random.Generator:
    """Return a PCG64 generator seeded via :func:`derive_seed`."""
    return np.random.default_rng(derive_seed(run_seed, *labels))
