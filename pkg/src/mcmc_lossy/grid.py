"""Reproduction alphabets.

The data-independent grid covers [-gamma, gamma] with step 1/gamma where
gamma = ceil(log2 n), giving 2*gamma**2 + 1 levels.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


def grid_gamma(n):
    """ceil(log2 n), computed exactly on integers."""
    if n < 2:
        raise ParameterError("n", f"need n >= 2, got {n}")
    return (int(n) - 1).bit_length()


@dataclass(frozen=True)
class ReproductionGrid:
    gamma: int
    levels: np.ndarray

    @property
    def size(self):
        return self.levels.size

    @property
    def step(self):
        return 1.0 / self.gamma


@dataclass(frozen=True)
class SymbolAlphabet:
    size: int

    def __post_init__(self):
        if self.size < 2:
            raise ParameterError("size", f"alphabet needs at least 2 symbols, got {self.size}")


def build_grid(n):
    gamma = grid_gamma(n)
    levels = np.arange(-gamma * gamma, gamma * gamma + 1, dtype=np.float64) / gamma
    levels.setflags(write=False)
    return ReproductionGrid(gamma, levels)


def default_alphabet(n):
    """Alphabet with the same cardinality as the data-independent grid."""
    gamma = grid_gamma(n)
    return SymbolAlphabet(2 * gamma * gamma + 1)


def uniform_levels(lo, hi, m):
    """``m`` equally spaced levels spanning [lo, hi]."""
    if hi <= lo:
        # degenerate span: a single distinct value repeated
        return np.full(m, float(lo)) + np.arange(m, dtype=np.float64)
    return lo + (hi - lo) * np.arange(m, dtype=np.float64) / (m - 1)


def quantize_to_grid(x, grid):
    """Index of the nearest level for every sample.

    ``grid`` is a ReproductionGrid or any increasing array of levels. Samples
    outside the level range clamp to the extreme levels; exact ties go to the
    smaller level.
    """
    levels = grid.levels if isinstance(grid, ReproductionGrid) else np.asarray(grid, dtype=np.float64)
    if levels.size == 0:
        raise ParameterError("grid", "empty grid")
    x = np.asarray(getattr(x, "samples", x), dtype=np.float64)
    hi = np.searchsorted(levels, x, side="left")
    hi = np.clip(hi, 1, max(levels.size - 1, 1))
    lo = hi - 1
    if levels.size == 1:
        return np.zeros(x.shape, dtype=np.int64)
    pick_lo = (x - levels[lo]) <= (levels[hi] - x)
    return np.where(pick_lo, lo, hi).astype(np.int64)
