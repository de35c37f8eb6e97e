import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mcmc_lossy._rng import make_rng
from mcmc_lossy.adaptive import (AdaptiveState, LevelQuantizer, MomentTable, adaptive_distortion,
                                 adaptive_energy, conditional_mean_levels, delta_adaptive_distortion,
                                 delta_effective_size, direct_adaptive_distortion,
                                 gibbs_conditional_adaptive, initial_symbols, loglog,
                                 quantize_levels, run_algorithm2)
from mcmc_lossy.annealer import AnnealConfig
from mcmc_lossy.entropy import build_counts
from mcmc_lossy.errors import ParameterError
from mcmc_lossy.grid import build_grid, quantize_to_grid

from oracles import adaptive_energy_by_definition, boltzmann, ceil_quantize

def random_state(seed, n=40, M=4, k=1, beta=-2.0, penalty=False):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=n) * 2
    return AdaptiveState(x, rng.integers(0, M, n), M, k, beta, include_alphabet_penalty=penalty)


def oracle_energy(state):
    q = state.quantizer
    return adaptive_energy_by_definition(state.x.tolist(), state.z.tolist(), state.k, state.beta,
                                         q.delta, q.gamma, state.penalty)


def test_conditional_mean_examples():
    assert conditional_mean_levels([1, 2, 5], [0, 0, 1]) == {0: 1.5, 1: 5.0}
    x = np.random.default_rng(0).normal(size=9)
    assert conditional_mean_levels(x, np.full(9, 2)) == {2: pytest.approx(x.mean())}


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=30), st.data())
def test_conditional_means_match_direct_average(x, data):
    z = data.draw(st.lists(st.integers(0, 4), min_size=len(x), max_size=len(x)))
    got = conditional_mean_levels(x, z)
    for a in set(z):
        members = [v for v, b in zip(x, z) if b == a]
        assert got[a] == pytest.approx(sum(members) / len(members), abs=1e-9)
    assert set(got) == set(z)


def test_quantize_examples():
    q = LevelQuantizer(gamma=3, bits=8, delta=10)
    assert quantize_levels({0: 1.23}, q)[0] == pytest.approx(1.3)
    assert quantize_levels({0: 0.7}, q)[0] == pytest.approx(0.7)
    assert quantize_levels({0: 9.0, 1: -9.0}, q) == {0: 3.0, 1: -3.0}


def test_quantization_error_bounds():
    q = LevelQuantizer.for_length(15000)
    v = np.random.default_rng(1).uniform(-q.gamma, q.gamma, 10**4)
    err = np.array([q.quantize(a) - a for a in v])
    assert err.min() >= -1e-12 and err.max() <= 1 / q.delta + 1e-12
    assert err.max() < 1 / q.gamma
    idx = [q.index(q.quantize(a)) for a in v[:500]]
    assert min(idx) >= 0 and max(idx) < 2 ** q.bits


def test_level_bits_default():
    assert LevelQuantizer.for_length(15000).bits == max(8, math.ceil(4 * math.log2(math.log2(15000))))
    assert LevelQuantizer.for_length(2 ** 40).bits == 22


def test_hand_distortion_example():
    # a lattice wide enough that 5 is not clamped; 1.5 and 5 lie on it
    q = LevelQuantizer(gamma=8, bits=8, delta=10)
    assert direct_adaptive_distortion([1, 2, 5], [0, 0, 1], q) == pytest.approx(1 / 6, abs=1e-12)
    st_ = AdaptiveState([1.0, 2.0, 5.0, 5.0], [0, 0, 1, 1], 2, 0, -1.0, quantizer=q)
    assert adaptive_distortion(st_) == pytest.approx(0.125, abs=1e-12)


def test_zero_levels_give_second_moment():
    # samples whose class means are 0 exactly
    x = np.array([-1.0, 1.0, -2.0, 2.0])
    st_ = AdaptiveState(x, [0, 0, 1, 1], 2, 0, -1.0)
    assert adaptive_distortion(st_) == pytest.approx(np.mean(x * x))


@settings(max_examples=100)
@given(st.integers(0, 10**6))
def test_moment_distortion_equals_definition(seed):
    st_ = random_state(seed, n=int(seed % 30) + 4, M=int(seed % 5) + 2)
    assert adaptive_distortion(st_) == pytest.approx(
        direct_adaptive_distortion(st_.x, st_.z, st_.quantizer), abs=1e-9)


def test_delta_distortion_matches_recompute():
    rng = np.random.default_rng(2)
    st_ = random_state(2, n=60, M=5)
    q = st_.quantizer
    for _ in range(2000):
        i, b = int(rng.integers(60)), int(rng.integers(5))
        z2 = st_.z.copy()
        z2[i] = b
        want = 60 * (direct_adaptive_distortion(st_.x, z2, q) - direct_adaptive_distortion(st_.x, st_.z, q))
        assert delta_adaptive_distortion(st_, i, b) == pytest.approx(want, abs=1e-9)
        if rng.random() < 0.5:
            st_.move(i, b)


def test_sole_occupant_leaves_effective_alphabet():
    st_ = AdaptiveState([0.0, 0.5, 3.0, 1.0], [0, 0, 1, 0], 2, 0, -1.0)
    assert delta_effective_size(st_, 2, 0) == -1
    d = delta_adaptive_distortion(st_, 2, 0)
    z2 = np.zeros(4, dtype=int)
    want = 4 * (direct_adaptive_distortion(st_.x, z2, st_.quantizer)
                - direct_adaptive_distortion(st_.x, st_.z, st_.quantizer))
    assert d == pytest.approx(want, abs=1e-12)
    st_.move(2, 0)
    assert st_.effective_size() == 1 and st_.m0[1] == 0 and st_.cost[1] == 0


def test_effective_size_delta_and_moments_after_moves():
    rng = np.random.default_rng(4)
    st_ = random_state(4, n=30, M=6)
    for _ in range(1000):
        i, b = int(rng.integers(30)), int(rng.integers(6))
        before = st_.effective_size()
        dz = delta_effective_size(st_, i, b)
        assert dz in (-1, 0, 1)
        st_.move(i, b)
        assert st_.effective_size() - before == dz
    ref = MomentTable.from_sequence(st_.x, st_.z, 6)
    assert np.array_equal(ref.m0, st_.m0)
    assert np.allclose(ref.m1, st_.m1, atol=1e-9) and np.allclose(ref.m2, st_.m2, atol=1e-9)
    assert st_.m0.sum() == 30
    occ = st_.m0 > 0
    assert np.all(st_.m2[occ] + 1e-9 >= st_.m1[occ] ** 2 / st_.m0[occ])


@pytest.mark.parametrize("penalty", [False, True])
def test_tracked_energy_matches_oracle(penalty):
    rng = np.random.default_rng(5)
    st_ = random_state(5, n=120, M=5, k=2, penalty=penalty)
    for _ in range(1000):
        st_.move(int(rng.integers(120)), int(rng.integers(5)))
    assert st_.current_energy == pytest.approx(oracle_energy(st_), rel=1e-6)
    assert st_.counts == build_counts(st_.z, 2, 5)


def test_energy_examples():
    x = np.array([0.3, 0.3, 0.3, 0.3, 0.3])
    z = np.zeros(5, dtype=int)
    q = LevelQuantizer.for_length(5)
    d = (q.quantize(0.3) - 0.3) ** 2
    on = adaptive_energy(x, z, 1, -2.0, include_alphabet_penalty=True)
    assert on == pytest.approx(-5 * -2.0 * d + 4 * loglog(5))
    off = adaptive_energy(x, z, 1, -2.0)
    assert on - off == pytest.approx(4 * loglog(5))
    with pytest.raises(ParameterError):
        adaptive_energy([1.0, 2.0, 3.0], [0, 0, 1], 0, -1.0)
    with pytest.raises(ParameterError):
        AdaptiveState([1.0, 2.0, 3.0], [0, 0, 1], 2, 0, -1.0)


def test_penalty_off_energy_ignores_alphabet_size():
    # two identical-valued classes: same H_0 and distortion whether or not split
    x = np.array([1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0])
    a = adaptive_energy(x, [0, 0, 1, 1, 2, 2, 3, 3], 1, -1.0)
    b = adaptive_energy(x, [0, 0, 1, 1, 2, 2, 3, 3], 1, -1.0, include_alphabet_penalty=True)
    assert b - a == pytest.approx(4 * 4 * loglog(8))


def test_conditional_zero_s_uniform():
    st_ = random_state(6)
    assert np.allclose(gibbs_conditional_adaptive(st_, 3, 0.0), 0.25, atol=1e-15)


@settings(max_examples=40)
@given(st.integers(0, 10**6), st.integers(4, 6), st.integers(2, 3), st.integers(0, 2),
       st.floats(0.0, 4.0), st.booleans())
def test_conditional_matches_brute_force(seed, n, M, k, s, penalty):
    st_ = random_state(seed, n, M, k, penalty=penalty)
    i = seed % n
    energies = []
    for b in range(M):
        z = st_.z.copy()
        z[i] = b
        q = st_.quantizer
        energies.append(adaptive_energy_by_definition(st_.x.tolist(), z.tolist(), k, st_.beta,
                                                      q.delta, q.gamma, st_.penalty))
    p = gibbs_conditional_adaptive(st_, i, s)
    assert abs(p.sum() - 1) < 1e-12
    assert np.allclose(p, boltzmann(energies, s), atol=1e-9)


def test_new_symbol_pays_penalty():
    x = np.array([0.0, 0.0, 1.0, 1.0, 1.0])
    st_ = AdaptiveState(x, [0, 0, 1, 1, 1], 3, 0, -1.0, include_alphabet_penalty=True)
    e = st_.site_energies(4)
    z2 = st_.z.copy()
    z2[4] = 2
    q = st_.quantizer
    direct = (adaptive_energy_by_definition(x.tolist(), z2.tolist(), 0, -1.0, q.delta, q.gamma, st_.penalty)
              - oracle_energy(st_))
    assert e[2] == pytest.approx(direct, abs=1e-9)
    assert delta_effective_size(st_, 4, 2) == 1


def test_conditional_means_never_worse_than_grid_levels():
    n = 256
    grid = build_grid(n)
    for seed in range(20):
        x = np.random.default_rng(seed).normal(size=n)
        z = quantize_to_grid(x, grid)
        rng = np.random.default_rng(seed + 100)
        z = np.where(rng.random(n) < 0.3, rng.integers(0, grid.size, n), z)
        means = conditional_mean_levels(x, z)
        y_opt = np.array([means[a] for a in z])
        assert np.mean((x - y_opt) ** 2) <= np.mean((x - grid.levels[z]) ** 2) + 1e-12


def test_initial_symbols():
    x = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
    assert initial_symbols(x, 5).tolist() == [0, 1, 2, 3, 4]
    n = 64
    x = np.random.default_rng(0).normal(size=n)
    assert np.array_equal(initial_symbols(x, build_grid(n).size), quantize_to_grid(x, build_grid(n)))


def test_run_algorithm2_determinism_and_validation():
    x = np.random.default_rng(8).normal(size=100)
    cfg = AnnealConfig(beta=-2.0, c=2.0, r=8, k=1, seed=3, t_offset=1)
    z1, cb1 = run_algorithm2(x, 4, cfg)
    z2, cb2 = run_algorithm2(x, 4, cfg)
    assert np.array_equal(z1, z2) and cb1.levels == cb2.levels
    assert set(cb1.levels) == set(np.unique(z1).tolist())
    with pytest.raises(ParameterError):
        run_algorithm2(x, 1, cfg)


def test_constant_input_collapses_to_one_symbol():
    x = np.full(64, 0.75)
    q = LevelQuantizer.for_length(64)
    best = -64 * -3.0 * (q.quantize(0.75) - 0.75) ** 2
    hits = 0
    for seed in range(10):
        cfg = AnnealConfig(beta=-3.0, c=2.0, r=40, k=1, seed=seed, t_offset=1)
        z, cb = run_algorithm2(x, 3, cfg)
        e = adaptive_energy(x, z, 1, -3.0)
        hits += e <= best + 1e-9
    assert hits >= 9
