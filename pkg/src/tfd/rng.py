"""Named, reproducible random sub-streams derived from one root seed."""

from __future__ import annotations

import hashlib

import numpy as np


def substream_seed(root: int, *names: object) -> np.random.SeedSequence:
    """Build a SeedSequence for ``root`` qualified by a path of names.

    The same ``(root, *names)`` always yields the same stream, and distinct
    name paths yield statistically independent streams.
    """
    words = [int(root) & 0xFFFFFFFFFFFFFFFF]
    for name in names:
        digest = hashlib.sha256(str(name).encode("utf-8")).digest()
        words.append(int.from_bytes(digest[:8], "little"))
    return np.random.SeedSequence(words)


def substream(root: int, *names: object) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(substream_seed(root, *names)))
