"""Tagged RNG substreams derived from one global seed."""

import zlib

import numpy as np


def derive_seed(seed: int, tag: str) -> int:
    """Stable 32-bit seed for the operation named ``tag``."""
    ss = np.random.SeedSequence([seed, zlib.crc32(tag.encode())])
    return int(ss.generate_state(1, dtype=np.uint32)[0])
