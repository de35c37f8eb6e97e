"""Context tree weighting over an M-ary alphabet, driving the range coder.

Every context of length d <= D (most recent symbol first) owns a node with
M symbol counts and the ratio ``beta = Pe / prod(Pw of children)``. The
prediction for the next symbol mixes along the current context path from the
deepest node up:

    p_D(a) = Pe_D(a)
    p_d(a) = w_d Pe_d(a) + (1 - w_d) p_{d+1}(a),   w_d = beta_d / (1 + beta_d)

with the KT estimator Pe(a) = (count_a + 1/2) / (total + M/2). After coding
symbol a, ``beta_d *= Pe_d(a) / p_{d+1}(a)``. Only multiplications and
divisions are used, so predictions are reproducible bit for bit on IEEE-754
hardware. Contexts before the first symbol are padded with symbol 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DecodeError, ParameterError
from .rangecoder import MAX_TOTAL, RangeDecoder, RangeEncoder

_BETA_MIN = 1e-250
_BETA_MAX = 1e250


@dataclass(frozen=True)
class Bitstream:
    data: bytes

    @property
    def length_bits(self):
        return 8 * len(self.data)

    def __len__(self):
        return len(self.data)


class _Node:
    __slots__ = ("counts", "total", "beta")

    def __init__(self, M):
        self.counts = np.zeros(M)
        self.total = 0.0
        self.beta = 1.0


class CtwModel:
    """Sequential CTW predictor; call :meth:`predict` then :meth:`update`."""

    def __init__(self, depth, M):
        if depth < 0:
            raise ParameterError("depth", "must be nonnegative")
        if M < 2:
            raise ParameterError("M", "alphabet needs at least 2 symbols")
        self.depth = depth
        self.M = M
        self.nodes = {}
        self.history = [0] * depth
        self._half_m = M / 2.0
        self._path = None

    def _path_nodes(self):
        nodes = []
        key = 0
        nodes.append(self._node((0, 0)))
        for d in range(1, self.depth + 1):
            key = key * self.M + self.history[-d]
            nodes.append(self._node((d, key)))
        return nodes

    def _node(self, key):
        node = self.nodes.get(key)
        if node is None:
            node = self.nodes[key] = _Node(self.M)
        return node

    def predict(self):
        """Mixture distribution of the next symbol."""
        nodes = self._path_nodes()
        estimates = []
        for node in nodes:
            estimates.append((node.counts + 0.5) / (node.total + self._half_m))
        mixed = [None] * len(nodes)
        p = estimates[-1]
        mixed[-1] = p
        for d in range(len(nodes) - 2, -1, -1):
            b = nodes[d].beta
            w = b / (1.0 + b)
            p = w * estimates[d] + (1.0 - w) * p
            mixed[d] = p
        self._path = (nodes, estimates, mixed)
        return p

    def update(self, a):
        nodes, estimates, mixed = self._path
        for d in range(len(nodes) - 1):
            node = nodes[d]
            b = node.beta * (estimates[d][a] / mixed[d + 1][a])
            node.beta = min(max(b, _BETA_MIN), _BETA_MAX)
        for node in nodes:
            node.counts[a] += 1.0
            node.total += 1.0
        if self.depth:
            self.history.append(a)
            del self.history[0]
        self._path = None


def frequencies(p, total=MAX_TOTAL):
    """Integer frequencies, each at least 1, proportional to ``p``."""
    return np.floor(p * (total - p.size)).astype(np.int64) + 1


def _check_symbols(z, M):
    z = np.asarray(z, dtype=np.int64)
    if z.ndim != 1:
        raise ParameterError("z", "need a 1-D symbol sequence")
    if z.size and (z.min() < 0 or z.max() >= M):
        bad = int(np.flatnonzero((z < 0) | (z >= M))[0])
        raise ParameterError("z", f"symbol {int(z[bad])} at position {bad} outside [0, {M})")
    return z


def encode(z, depth, M):
    z = _check_symbols(z, M)
    if z.size == 0:
        return Bitstream(b"")
    model = CtwModel(depth, M)
    enc = RangeEncoder()
    for a in z.tolist():
        freq = frequencies(model.predict())
        cum = np.cumsum(freq)
        lo = int(cum[a - 1]) if a else 0
        enc.encode(lo, int(freq[a]), int(cum[-1]))
        model.update(a)
    return Bitstream(enc.finish())


def decode(bits, n, depth, M):
    data = bits.data if isinstance(bits, Bitstream) else bytes(bits)
    if n == 0:
        if data:
            raise DecodeError("non-empty payload for an empty sequence")
        return np.zeros(0, dtype=np.int64)
    if not data:
        raise DecodeError("empty payload")
    model = CtwModel(depth, M)
    dec = RangeDecoder(data)
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        freq = frequencies(model.predict())
        cum = np.cumsum(freq)
        total = int(cum[-1])
        a = int(np.searchsorted(cum, dec.target(total), side="right"))
        lo = int(cum[a - 1]) if a else 0
        dec.consume(lo, int(freq[a]), total)
        model.update(a)
        out[i] = a
    dec.finish()
    return out


def ideal_codelength(z, depth, M):
    """-log2 of the CTW probability of the whole sequence, in bits."""
    z = _check_symbols(z, M)
    model = CtwModel(depth, M)
    bits = 0.0
    for a in z.tolist():
        bits -= math.log2(model.predict()[a])
        model.update(a)
    return bits
