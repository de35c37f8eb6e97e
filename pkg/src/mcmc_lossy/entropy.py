"""Context counts and the k-depth conditional empirical entropy.

Positions are 0-based: window j (k <= j < n) is the (k+1)-gram
``z[j-k:j+1]`` and contributes one count to context ``z[j-k:j]``. The first k
positions contribute nothing, and H_k is normalized by n, not n - k.
"""
from __future__ import annotations

import numpy as np

from . import _kernels as K
from .errors import ParameterError

# dense count arrays are capped so a bad (M, k) pair fails loudly instead of swapping
MAX_CELLS = 1 << 26


def xlog2x_table(n):
    m = np.arange(n + 2, dtype=np.float64)
    out = np.zeros_like(m)
    out[1:] = m[1:] * np.log2(m[1:])
    return out


def packed_windows(z, k, M):
    """Packed (k+1)-gram code of every window, oldest symbol most significant."""
    z = np.asarray(z, dtype=np.int64)
    n = z.size
    codes = np.zeros(n - k, dtype=np.int64)
    for t in range(k + 1):
        codes = codes * M + z[t : n - k + t]
    return codes


class ContextCountTable:
    """Counts m_k(z, u^k)[a] for a fixed sequence length n.

    ``cells`` and ``rows`` are the dense arrays used by the compiled samplers;
    :attr:`counts` gives the sparse view keyed by (context tuple, symbol).
    """

    def __init__(self, k, M, n, cells, rows):
        self.k = k
        self.M = M
        self.n = n
        self.cells = cells
        self.rows = rows
        self.flog = xlog2x_table(n)

    @property
    def counts(self):
        out = {}
        for code in np.flatnonzero(self.cells).tolist():
            out[(self._unpack(code // self.M), code % self.M)] = int(self.cells[code])
        return out

    def _unpack(self, ctx):
        digits = []
        for _ in range(self.k):
            ctx, d = divmod(ctx, self.M)
            digits.append(d)
        return tuple(reversed(digits))

    def count(self, context, symbol):
        code = 0
        for a in context:
            code = code * self.M + a
        return int(self.cells[code * self.M + symbol])

    def total(self):
        return int(self.cells.sum())

    def copy(self):
        return ContextCountTable(self.k, self.M, self.n, self.cells.copy(), self.rows.copy())

    def __eq__(self, other):
        return (
            isinstance(other, ContextCountTable)
            and (self.k, self.M, self.n) == (other.k, other.M, other.n)
            and np.array_equal(self.cells, other.cells)
        )

    def __repr__(self):
        return f"ContextCountTable(k={self.k}, M={self.M}, n={self.n}, occupied={np.count_nonzero(self.cells)})"


def check_table_size(k, M):
    if M ** (k + 1) > MAX_CELLS:
        raise ParameterError("k", f"M**(k+1) = {M}**{k + 1} exceeds the dense count limit {MAX_CELLS}")


def build_counts(z, k, M):
    z = np.asarray(z, dtype=np.int64)
    n = z.size
    if k < 0:
        raise ParameterError("k", "context depth must be nonnegative")
    if k >= n:
        raise ParameterError("k", f"context depth {k} must be smaller than the length {n}")
    if z.size and (z.min() < 0 or z.max() >= M):
        raise ParameterError("z", f"symbols must lie in [0, {M})")
    check_table_size(k, M)
    cells = np.bincount(packed_windows(z, k, M), minlength=M ** (k + 1)).astype(np.int64)
    rows = cells.reshape(-1, M).sum(axis=1)
    return ContextCountTable(k, M, n, cells, rows)


def conditional_entropy(table):
    """H_k in bits per symbol."""
    flog = table.flog
    nh = flog[table.rows].sum() - flog[table.cells].sum()
    return max(float(nh) / table.n, 0.0)


def delta_entropy(table, z, i, b):
    """H_k(z with z[i] = b) - H_k(z), touching only the windows covering i."""
    _check_site(table, i, b)
    out = np.empty(table.M)
    zz = _as_kernel_seq(z)
    K.entropy_deltas(zz, i, table.k, table.M, table.cells, table.rows, table.flog, out)
    if zz is not z:
        z[:] = zz
    return out[b] / table.n


def apply_substitution(table, z, i, b):
    """Set z[i] = b in place and update the counts; returns (table, z)."""
    _check_site(table, i, b)
    zz = _as_kernel_seq(z)
    K.substitute(zz, i, b, table.k, table.M, table.cells, table.rows, table.flog)
    if zz is not z:
        z[:] = zz
    return table, z


def _check_site(table, i, b):
    if not 0 <= i < table.n:
        raise ParameterError("i", f"position {i} outside [0, {table.n})")
    if not 0 <= b < table.M:
        raise ParameterError("b", f"symbol {b} outside [0, {table.M})")


def _as_kernel_seq(z):
    if isinstance(z, np.ndarray) and z.dtype == np.int64 and z.flags.c_contiguous:
        return z
    return np.ascontiguousarray(z, dtype=np.int64)
