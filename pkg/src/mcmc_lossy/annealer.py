"""Simulated-annealing Gibbs sampler over a fixed reproduction grid.

The energy of a symbol sequence y over levels L is

    n * H_k(y) - beta * sum_i (x_i - L[y_i])**2,    beta < 0,

and one super-iteration resamples every position once, in a random
permutation order, from its conditional Boltzmann distribution at inverse
temperature s. Super-iteration t runs at s = c * log2(t + t_offset).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from ._rng import make_rng, uniforms
from .entropy import build_counts, conditional_entropy
from .errors import ParameterError
from .grid import ReproductionGrid, quantize_to_grid
from .sources import SignalBuffer


@dataclass(frozen=True)
class AnnealConfig:
    beta: float
    c: float = 1.0
    r: int = 50
    k: int = 1
    seed: int = 0
    t_offset: int = 0

    def __post_init__(self):
        if not self.beta < 0:
            raise ParameterError("beta", f"RD slope must be negative, got {self.beta}")
        if not self.c > 0:
            raise ParameterError("c", f"schedule constant must be positive, got {self.c}")
        if self.r < 1:
            raise ParameterError("r", f"need at least one super-iteration, got {self.r}")
        if self.k < 0:
            raise ParameterError("k", "context depth must be nonnegative")
        if self.t_offset < 0:
            raise ParameterError("t_offset", "must be nonnegative")

    def inverse_temperature(self, t):
        """s for super-iteration t = 1, 2, ..."""
        return self.c * math.log2(t + self.t_offset)


def _samples(x):
    return np.ascontiguousarray(getattr(x, "samples", x), dtype=np.float64)


def distortion(x, y):
    """Mean squared error between two real sequences."""
    x = _samples(x)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ParameterError("y", f"length mismatch: {x.size} vs {y.size}")
    return float(np.mean((x - y) ** 2))


def relabel(y):
    """Symbol indices and distinct values of a real sequence."""
    values, z = np.unique(np.asarray(y, dtype=np.float64), return_inverse=True)
    return z.astype(np.int64), values


def energy(x, y, k, beta):
    """n * [H_k(y) - beta * d_n(x, y)] evaluated from scratch.

    ``y`` holds real reproduction values; H_k does not depend on how they are
    labelled.
    """
    x = _samples(x)
    z, values = relabel(y)
    table = build_counts(z, k, max(values.size, 2))
    return x.size * (conditional_entropy(table) - beta * distortion(x, y))


class _GibbsBase:
    """State shared by the fixed-grid and adaptive samplers."""

    def __init__(self, x, z, k, M, beta):
        if beta >= 0:
            raise ParameterError("beta", "RD slope must be negative")
        self.x = _samples(x)
        self.z = np.array(z, dtype=np.int64)
        if self.z.shape != self.x.shape:
            raise ParameterError("z", "symbol sequence and signal differ in length")
        self.k = int(k)
        self.M = int(M)
        self.beta = float(beta)
        self.counts = build_counts(self.z, self.k, self.M)
        self.current_energy = self.recompute_energy()

    @property
    def n(self):
        return self.x.size

    def site_energies(self, i):
        """Energy change for every candidate symbol at position i."""
        if not 0 <= i < self.n:
            raise ParameterError("i", f"position {i} outside [0, {self.n})")
        out = np.empty(self.M)
        self._site_energies(int(i), out)
        return out

    def conditional(self, i, s):
        """Gibbs conditional pmf of z[i] given the rest, at inverse temperature s."""
        if s < 0:
            raise ParameterError("s", "inverse temperature must be nonnegative")
        e = self.site_energies(i)
        logits = -s * (e - e.min())
        p = np.exp(logits)
        return p / p.sum()

    def sweep(self, s, rng):
        n = self.n
        perm = K.shuffle(n, uniforms(rng, n))
        u = uniforms(rng, n)
        self.current_energy += self._sweep(float(s), perm, u)

    def anneal(self, config, rng=None):
        """Run ``config.r`` super-iterations on the schedule; returns self."""
        rng = make_rng(config.seed) if rng is None else rng
        for t in range(1, config.r + 1):
            self.sweep(config.inverse_temperature(t), rng)
        return self


class GibbsState(_GibbsBase):
    """Sampler over fixed levels; ``z`` indexes ``levels``."""

    def __init__(self, x, levels, z, k, beta):
        self.levels = np.ascontiguousarray(getattr(levels, "levels", levels), dtype=np.float64)
        super().__init__(x, z, k, self.levels.size, beta)

    @property
    def y(self):
        return self.levels[self.z]

    def recompute_energy(self):
        d = float(np.sum((self.x - self.levels[self.z]) ** 2))
        return self.n * conditional_entropy(self.counts) - self.beta * d

    def _site_energies(self, i, out):
        c = self.counts
        K.fixed_site_energies(self.z, self.x, self.levels, i, self.k, self.M,
                              c.cells, c.rows, c.flog, self.beta, out)

    def _sweep(self, s, perm, u):
        c = self.counts
        return K.fixed_sweep(self.z, self.x, self.levels, self.k, self.M,
                             c.cells, c.rows, c.flog, self.beta, s, perm, u)

    def move(self, i, b):
        """Force z[i] = b, keeping counts and energy in sync."""
        e = self.site_energies(i)[b]
        c = self.counts
        K.substitute(self.z, i, b, self.k, self.M, c.cells, c.rows, c.flog)
        self.current_energy += e


def gibbs_conditional(state, i, s):
    return state.conditional(i, s)


def super_iteration(state, s, rng):
    state.sweep(s, rng)
    return state


def initial_state(x, grid, config):
    levels = grid.levels if isinstance(grid, ReproductionGrid) else np.asarray(grid, dtype=np.float64)
    z = quantize_to_grid(x, levels)
    return GibbsState(x, levels, z, config.k, config.beta)


def run_algorithm1(x, grid, config):
    """Anneal from the nearest-level quantization; returns the final symbol indices."""
    if isinstance(x, SignalBuffer):
        x = x.samples
    state = initial_state(x, grid, config)
    state.anneal(config)
    return state.z.copy()
