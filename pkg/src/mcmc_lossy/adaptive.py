"""Annealing with adaptive reproduction levels.

Each symbol alpha is reproduced by the ceiling-quantized mean of the samples
assigned to it. Per-symbol moments (count, sum, sum of squares) make the
distortion change of a single reassignment an O(1) computation:

    sum_{z_i = alpha} (x_i - q)**2 = X2 - 2 q X1 + q**2 X0.

Levels sit on the lattice j / delta, |j| <= gamma * delta, and are sent as
b-bit indices j + gamma * delta.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .annealer import AnnealConfig, _GibbsBase, _samples
from .entropy import conditional_entropy
from .errors import ParameterError
from .grid import build_grid, default_alphabet, grid_gamma, quantize_to_grid, uniform_levels

DEFAULT_MU = 4.0
MIN_LEVEL_BITS = 8


def loglog(n):
    if n < 4:
        raise ParameterError("n", f"log2(log2(n)) needs n >= 4, got {n}")
    return math.log2(math.log2(n))


@dataclass(frozen=True)
class LevelQuantizer:
    """Lattice of representable levels: j / delta for |j| <= gamma * delta."""

    gamma: int
    bits: int
    delta: int

    @classmethod
    def for_length(cls, n, mu=DEFAULT_MU, bits=None):
        gamma = grid_gamma(n)
        if bits is None:
            bits = max(MIN_LEVEL_BITS, math.ceil(mu * loglog(n)))
        delta = ((1 << bits) - 1) // (2 * gamma)
        if delta < 1:
            raise ParameterError("bits", f"{bits} bits cannot cover [-{gamma}, {gamma}]")
        return cls(gamma, bits, delta)

    @property
    def step(self):
        return 1.0 / self.delta

    def quantize(self, value):
        return K.quantized_level(1, float(value), float(self.delta), float(self.gamma))

    def index(self, level):
        return int(round(level * self.delta)) + self.gamma * self.delta

    def level(self, index):
        return (index - self.gamma * self.delta) / self.delta


@dataclass
class MomentTable:
    m0: np.ndarray
    m1: np.ndarray
    m2: np.ndarray

    @classmethod
    def from_sequence(cls, x, z, M):
        x = _samples(x)
        z = np.asarray(z, dtype=np.int64)
        return cls(
            np.bincount(z, minlength=M).astype(np.int64),
            np.bincount(z, weights=x, minlength=M),
            np.bincount(z, weights=x * x, minlength=M),
        )

    def effective(self):
        return np.flatnonzero(self.m0)


@dataclass
class AdaptiveCodebook:
    """Quantized level for every symbol in the effective alphabet."""

    mu: float
    quantizer: LevelQuantizer
    levels: dict = field(default_factory=dict)

    @property
    def level_bits(self):
        return self.quantizer.bits

    @property
    def effective(self):
        return sorted(self.levels)

    def indices(self):
        return [self.quantizer.index(self.levels[a]) for a in self.effective]

    def reproduce(self, z):
        table = np.zeros(max(self.levels, default=0) + 1)
        for a, v in self.levels.items():
            table[a] = v
        return table[np.asarray(z, dtype=np.int64)]


def conditional_mean_levels(x, z):
    """Mean of the samples assigned to each occurring symbol."""
    x = _samples(x)
    z = np.asarray(z, dtype=np.int64)
    M = int(z.max()) + 1
    mom = MomentTable.from_sequence(x, z, M)
    return {int(a): float(mom.m1[a] / mom.m0[a]) for a in mom.effective()}


def quantize_levels(levels, codebook):
    q = codebook.quantizer if isinstance(codebook, AdaptiveCodebook) else codebook
    return {a: q.quantize(v) for a, v in levels.items()}


class AdaptiveState(_GibbsBase):
    """Gibbs state over abstract symbols 0..M-1 with adaptive levels."""

    def __init__(self, x, z, M, k, beta, mu=DEFAULT_MU, include_alphabet_penalty=False,
                 quantizer=None):
        x = _samples(x)
        self.mu = float(mu)
        self.quantizer = quantizer or LevelQuantizer.for_length(x.size, mu)
        self.include_alphabet_penalty = bool(include_alphabet_penalty)
        self.penalty = self.mu * loglog(x.size) if include_alphabet_penalty else 0.0
        self._delta = float(self.quantizer.delta)
        self._gamma = float(self.quantizer.gamma)
        self.m0 = np.zeros(M, dtype=np.int64)
        self.m1 = np.zeros(M)
        self.m2 = np.zeros(M)
        self.cost = np.zeros(M)
        K.rebuild_moments(np.asarray(z, dtype=np.int64), x, M, self._delta, self._gamma, self.m0, self.m1, self.m2, self.cost)
        super().__init__(x, z, k, M, beta)

    @property
    def moments(self):
        return MomentTable(self.m0, self.m1, self.m2)

    def codebook(self):
        levels = {
            int(a): K.quantized_level(self.m0[a], self.m1[a], self._delta, self._gamma)
            for a in np.flatnonzero(self.m0)
        }
        return AdaptiveCodebook(self.mu, self.quantizer, levels)

    @property
    def y(self):
        return self.codebook().reproduce(self.z)

    def effective_size(self):
        return int(np.count_nonzero(self.m0))

    def distortion_sum(self):
        """n * d_a from the moment expansion."""
        return float(self.cost.sum())

    def recompute_energy(self):
        return (self.n * conditional_entropy(self.counts) - self.beta * self.distortion_sum()
                + self.penalty * self.effective_size())

    def resync(self):
        """Rebuild moments from (x, z) to shed floating-point drift."""
        K.rebuild_moments(self.z, self.x, self.M, self._delta, self._gamma,
                          self.m0, self.m1, self.m2, self.cost)

    def _site_energies(self, i, out):
        c = self.counts
        K.adaptive_site_energies(self.z, self.x, i, self.k, self.M, c.cells, c.rows, c.flog,
                                 self.beta, self.penalty, self._delta, self._gamma,
                                 self.m0, self.m1, self.m2, self.cost, out)

    def _sweep(self, s, perm, u):
        self.resync()
        c = self.counts
        return K.adaptive_sweep(self.z, self.x, self.k, self.M, c.cells, c.rows, c.flog,
                                self.beta, self.penalty, self._delta, self._gamma,
                                self.m0, self.m1, self.m2, self.cost, s, perm, u)

    def move(self, i, b):
        """Force z[i] = b, keeping counts, moments and energy in sync."""
        e = self.site_energies(i)[b]
        c = self.counts
        K.adaptive_move(self.z, self.x, i, b, self.k, self.M, c.cells, c.rows, c.flog,
                        self._delta, self._gamma, self.m0, self.m1, self.m2, self.cost)
        self.current_energy += e


def adaptive_distortion(state):
    """d_a via the per-symbol moment expansion."""
    return state.distortion_sum() / state.n


def direct_adaptive_distortion(x, z, quantizer):
    """d_a by the definition: mean of (x_i - a_q(z_i))**2 with levels recomputed from (x, z)."""
    x = _samples(x)
    levels = quantize_levels(conditional_mean_levels(x, z), quantizer)
    y = np.array([levels[a] for a in np.asarray(z).tolist()])
    return float(np.mean((x - y) ** 2))


def delta_adaptive_distortion(state, i, b):
    """n * [d_a(z with z[i] = b) - d_a(z)], levels re-optimized on both sides."""
    a = int(state.z[i])
    if b == a:
        return 0.0
    xi = float(state.x[i])
    d, g = state._delta, state._gamma
    m0, m1, m2, cost = state.m0, state.m1, state.m2, state.cost
    leave = K.class_cost(m0[a] - 1, m1[a] - xi, m2[a] - xi * xi, d, g) - cost[a]
    join = K.class_cost(m0[b] + 1, m1[b] + xi, m2[b] + xi * xi, d, g) - cost[b]
    return float(leave + join)


def delta_effective_size(state, i, b):
    a = int(state.z[i])
    if a == b:
        return 0
    return (-1 if state.m0[a] == 1 else 0) + (1 if state.m0[b] == 0 else 0)


def adaptive_energy(x, z, k, beta, mu=DEFAULT_MU, include_alphabet_penalty=False, quantizer=None):
    """n [H_k(z) - beta d_a] (+ mu log2 log2 n |Z_e|), evaluated from scratch."""
    from .entropy import build_counts

    x = _samples(x)
    z = np.asarray(z, dtype=np.int64)
    n = x.size
    pen = mu * loglog(n) if include_alphabet_penalty else 0.0
    quantizer = quantizer or LevelQuantizer.for_length(n, mu)
    M = max(int(z.max()) + 1, 2)
    h = conditional_entropy(build_counts(z, k, M))
    return n * h - beta * n * direct_adaptive_distortion(x, z, quantizer) + pen * np.unique(z).size


def gibbs_conditional_adaptive(state, i, s):
    return state.conditional(i, s)


def initial_symbols(x, M):
    """Nearest of M uniform levels over [min x, max x], or of the fixed grid when M matches it."""
    x = _samples(x)
    n = x.size
    if n >= 2 and M == default_alphabet(n).size:
        return quantize_to_grid(x, build_grid(n))
    return quantize_to_grid(x, uniform_levels(float(x.min()), float(x.max()), M))


def run_algorithm2(x, M, config, include_alphabet_penalty=False, mu=DEFAULT_MU, z0=None, rng=None):
    """Anneal over M abstract symbols; returns (z, codebook)."""
    if M < 2:
        raise ParameterError("M", "alphabet needs at least 2 symbols")
    if not isinstance(config, AnnealConfig):
        raise ParameterError("config", "expected an AnnealConfig")
    z = initial_symbols(x, M) if z0 is None else np.asarray(z0, dtype=np.int64)
    state = AdaptiveState(x, z, M, config.k, config.beta, mu, include_alphabet_penalty)
    state.anneal(config, rng)
    return state.z.copy(), state.codebook()
