"""Compiled inner loops for the Gibbs samplers.

Context counts live in two dense integer arrays: ``cells`` indexed by the
packed (k+1)-gram (oldest symbol most significant, current symbol least
significant) and ``rows`` indexed by the packed k-symbol context, so that
``rows[c // M] == sum(cells[c // M * M:(c // M + 1) * M])``.

``flog[m] = m * log2(m)`` for m in 0..n. With these, n * H_k equals
``sum(flog[rows]) - sum(flog[cells])`` and every count change has an exact
local effect on that sum.
"""
import math

import numpy as np
from numba import njit


@njit(cache=True)
def window_code(z, j, k, M):
    c = 0
    for t in range(j - k, j + 1):
        c = c * M + z[t]
    return c


@njit(cache=True)
def bump(cells, rows, code, M, step, flog):
    """Add ``step`` to one cell; return the change in n*H_k."""
    r = code // M
    c_old = cells[code]
    t_old = rows[r]
    cells[code] = c_old + step
    rows[r] = t_old + step
    return (flog[t_old + step] - flog[t_old]) - (flog[c_old + step] - flog[c_old])


@njit(cache=True)
def move_windows(z, i, k, M, cells, rows, flog, step):
    """Add or remove every window touching position i; return the change in n*H_k."""
    n = z.shape[0]
    lo = i if i > k else k
    hi = i + k if i + k < n else n - 1
    d = 0.0
    for j in range(lo, hi + 1):
        d += bump(cells, rows, window_code(z, j, k, M), M, step, flog)
    return d


@njit(cache=True)
def entropy_deltas(z, i, k, M, cells, rows, flog, out):
    """out[b] = change in n*H_k when z[i] is replaced by b. State is restored."""
    n = z.shape[0]
    a = z[i]
    lo = i if i > k else k
    hi = i + k if i + k < n else n - 1
    nw = hi - lo + 1
    if nw <= 0:
        for b in range(M):
            out[b] = 0.0
        return
    # window code = base + symbol_at_i * weight
    base = np.empty(nw, dtype=np.int64)
    weight = np.empty(nw, dtype=np.int64)
    z[i] = 0
    for w in range(nw):
        j = lo + w
        base[w] = window_code(z, j, k, M)
        p = 1
        for _ in range(j - i):
            p *= M
        weight[w] = p
    z[i] = a
    removed = 0.0
    for w in range(nw):
        removed += bump(cells, rows, base[w] + a * weight[w], M, -1, flog)
    for b in range(M):
        if b == a:
            out[b] = 0.0
            continue
        d = removed
        for w in range(nw):
            d += bump(cells, rows, base[w] + b * weight[w], M, 1, flog)
        out[b] = d
        for w in range(nw):
            bump(cells, rows, base[w] + b * weight[w], M, -1, flog)
    for w in range(nw):
        bump(cells, rows, base[w] + a * weight[w], M, 1, flog)


@njit(cache=True)
def substitute(z, i, b, k, M, cells, rows, flog):
    """Set z[i] = b keeping the counts in sync; return the change in n*H_k."""
    if z[i] == b:
        return 0.0
    d = move_windows(z, i, k, M, cells, rows, flog, -1)
    z[i] = b
    return d + move_windows(z, i, k, M, cells, rows, flog, 1)


@njit(cache=True)
def draw(energies, s, u, probs):
    """Sample from softmax(-s * energies) by CDF inversion with one uniform."""
    M = energies.shape[0]
    best = energies[0]
    for b in range(1, M):
        if energies[b] < best:
            best = energies[b]
    total = 0.0
    for b in range(M):
        w = math.exp(-s * (energies[b] - best))
        probs[b] = w
        total += w
    target = u * total
    acc = 0.0
    for b in range(M):
        acc += probs[b]
        if target < acc:
            return b
    # rounding left target at the very top; return the last positive weight
    for b in range(M - 1, -1, -1):
        if probs[b] > 0.0:
            return b
    return M - 1


@njit(cache=True)
def shuffle(n, u):
    """Fisher-Yates permutation of 0..n-1 driven by n uniforms."""
    perm = np.arange(n)
    for t in range(n - 1, 0, -1):
        j = int(u[t] * (t + 1))
        if j > t:
            j = t
        tmp = perm[t]
        perm[t] = perm[j]
        perm[j] = tmp
    return perm


# ---- fixed reproduction grid -------------------------------------------------

@njit(cache=True)
def fixed_site_energies(z, x, levels, i, k, M, cells, rows, flog, beta, out):
    entropy_deltas(z, i, k, M, cells, rows, flog, out)
    xi = x[i]
    da = (levels[z[i]] - xi) ** 2
    for b in range(M):
        out[b] -= beta * ((levels[b] - xi) ** 2 - da)


@njit(cache=True)
def fixed_sweep(z, x, levels, k, M, cells, rows, flog, beta, s, perm, u):
    """One super-iteration; returns the energy change."""
    n = z.shape[0]
    energies = np.empty(M)
    probs = np.empty(M)
    d_energy = 0.0
    for t in range(n):
        i = perm[t]
        fixed_site_energies(z, x, levels, i, k, M, cells, rows, flog, beta, energies)
        b = draw(energies, s, u[t], probs)
        if b != z[i]:
            substitute(z, i, b, k, M, cells, rows, flog)
            d_energy += energies[b]
    return d_energy


# ---- adaptive reproduction levels --------------------------------------------

@njit(cache=True)
def quantized_level(x0, x1, delta, gamma):
    """Ceiling-quantized conditional mean on the lattice j/delta, clamped to [-gamma, gamma]."""
    v = x1 / x0 * delta
    j = math.ceil(v - 1e-9 * max(1.0, abs(v)))
    lim = gamma * delta
    if j > lim:
        j = lim
    elif j < -lim:
        j = -lim
    return j / delta


@njit(cache=True)
def class_cost(x0, x1, x2, delta, gamma):
    """Sum of squared errors of one symbol class around its quantized level."""
    if x0 == 0:
        return 0.0
    q = quantized_level(x0, x1, delta, gamma)
    return x2 - 2.0 * q * x1 + q * q * x0


@njit(cache=True)
def rebuild_moments(z, x, M, delta, gamma, m0, m1, m2, cost):
    for a in range(M):
        m0[a] = 0
        m1[a] = 0.0
        m2[a] = 0.0
    for i in range(z.shape[0]):
        a = z[i]
        m0[a] += 1
        m1[a] += x[i]
        m2[a] += x[i] * x[i]
    for a in range(M):
        cost[a] = class_cost(m0[a], m1[a], m2[a], delta, gamma)


@njit(cache=True)
def adaptive_site_energies(z, x, i, k, M, cells, rows, flog, beta, penalty,
                           delta, gamma, m0, m1, m2, cost, out):
    entropy_deltas(z, i, k, M, cells, rows, flog, out)
    a = z[i]
    xi = x[i]
    xx = xi * xi
    leave = class_cost(m0[a] - 1, m1[a] - xi, m2[a] - xx, delta, gamma) - cost[a]
    dz_leave = -1 if m0[a] == 1 else 0
    for b in range(M):
        if b == a:
            continue
        join = class_cost(m0[b] + 1, m1[b] + xi, m2[b] + xx, delta, gamma) - cost[b]
        dz = dz_leave + (1 if m0[b] == 0 else 0)
        out[b] += -beta * (leave + join) + penalty * dz


@njit(cache=True)
def adaptive_move(z, x, i, b, k, M, cells, rows, flog, delta, gamma, m0, m1, m2, cost):
    a = z[i]
    if a == b:
        return
    substitute(z, i, b, k, M, cells, rows, flog)
    xi = x[i]
    xx = xi * xi
    m0[a] -= 1
    if m0[a] == 0:
        m1[a] = 0.0
        m2[a] = 0.0
    else:
        m1[a] -= xi
        m2[a] -= xx
    m0[b] += 1
    m1[b] += xi
    m2[b] += xx
    cost[a] = class_cost(m0[a], m1[a], m2[a], delta, gamma)
    cost[b] = class_cost(m0[b], m1[b], m2[b], delta, gamma)


@njit(cache=True)
def adaptive_sweep(z, x, k, M, cells, rows, flog, beta, penalty, delta, gamma,
                   m0, m1, m2, cost, s, perm, u):
    n = z.shape[0]
    energies = np.empty(M)
    probs = np.empty(M)
    d_energy = 0.0
    for t in range(n):
        i = perm[t]
        adaptive_site_energies(z, x, i, k, M, cells, rows, flog, beta, penalty,
                               delta, gamma, m0, m1, m2, cost, energies)
        b = draw(energies, s, u[t], probs)
        if b != z[i]:
            adaptive_move(z, x, i, b, k, M, cells, rows, flog, delta, gamma, m0, m1, m2, cost)
            d_energy += energies[b]
    return d_energy
