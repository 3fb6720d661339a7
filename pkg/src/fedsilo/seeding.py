"""Deterministic seed derivation.

Every random decision in the package flows through numpy's SeedSequence.
Derived streams are keyed by (root seed, purpose tag, indices...) so that
independent components never share a stream and reruns are bit-identical.
"""

from __future__ import annotations

import hashlib

import numpy as np

RngLike = int | np.random.SeedSequence | np.random.Generator


def _entropy(parts: tuple[int | str, ...]) -> list[int]:
    out: list[int] = []
    for part in parts:
        if isinstance(part, str):
            digest = hashlib.sha256(part.encode("utf-8")).digest()
            out.append(int.from_bytes(digest[:8], "little"))
        else:
            out.append(int(part) & 0xFFFFFFFFFFFFFFFF)
    return out


def seed_sequence(*parts: int | str) -> np.random.SeedSequence:
    if not parts:
        raise ValueError("seed_sequence needs at least one part")
    return np.random.SeedSequence(_entropy(parts))


def derive_rng(*parts: int | str) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(*parts))


def derive_seed(*parts: int | str) -> int:
    """A 64-bit unsigned seed deterministically derived from the parts."""
    return int(seed_sequence(*parts).generate_state(1, np.uint64)[0])


def as_generator(seed: RngLike) -> np.random.Generator:
    """Accept an int seed, a SeedSequence, or a ready Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
