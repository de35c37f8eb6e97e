"""Portable random streams.

All randomness flows from numpy's PCG64 bit generator, consumed only through
``random_raw`` so the streams do not depend on numpy's distribution code.
Uniform doubles take the top 53 bits of each 64-bit word.
"""
import numpy as np

_TWO_M53 = 2.0 ** -53


def make_rng(*key):
    """PCG64 stream for an integer key tuple, e.g. ``make_rng(seed, beta_index)``."""
    words = [int(k) & 0xFFFFFFFFFFFFFFFF for k in key]
    return np.random.PCG64(np.random.SeedSequence(words))


def uniforms(rng, size):
    """``size`` doubles in [0, 1)."""
    raw = rng.random_raw(size)
    return (raw >> np.uint64(11)).astype(np.float64) * _TWO_M53


def open_uniforms(rng, size):
    """``size`` doubles in (0, 1), never hitting either endpoint."""
    raw = rng.random_raw(size)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53
