"""Sampling determinism, ensemble moments, trace utilities, text format."""

import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skcw.randmat import (
    SeedSpec,
    all_ones_spins,
    alternating_spins,
    check_spins,
    gauge_conjugate,
    hollowed,
    load_matrix_text,
    power_traces,
    random_spins,
    sample_gaussian_matrix,
    sample_tilted_matrix,
    save_matrix_text,
)

SEED = SeedSpec(20240817, 0)


def test_determinism_and_stream_separation():
    a = sample_gaussian_matrix(8, SEED)
    b = sample_gaussian_matrix(8, SEED)
    c = sample_gaussian_matrix(8, SEED.stream(1))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_symmetry_and_hollow():
    a = sample_gaussian_matrix(15, SEED)
    assert np.array_equal(a, a.T)
    h = sample_gaussian_matrix(15, SEED, hollow=True)
    assert np.all(np.diag(h) == 0.0)
    assert np.array_equal(h, h.T)
    # hollow and plain share the off-diagonal draws under the same seed
    assert np.array_equal(hollowed(a), h)


def test_pooled_moments_large_matrix():
    n = 2000
    a = sample_gaussian_matrix(n, SEED)
    iu = np.triu_indices(n, 1)
    pool = a[iu]
    tol = 3.0 / math.sqrt(pool.size)
    assert abs(pool.mean()) < tol
    assert abs(pool.var(ddof=1) - 1.0) < 0.05


def test_tilted_zero_beta_bit_identical():
    a = sample_gaussian_matrix(9, SEED)
    t = sample_tilted_matrix(9, all_ones_spins(9), 0.0, SEED)
    assert np.array_equal(a, t)


def test_tilted_mean_shift():
    n, beta = 100, 0.4
    t = sample_tilted_matrix(n, all_ones_spins(n), beta, SEED)
    iu = np.triu_indices(n, 1)
    pool = t[iu]
    target = 2 * beta / math.sqrt(n)
    assert abs(pool.mean() - target) < 3.0 / math.sqrt(pool.size)


def test_tilted_gauge_relation_distributional():
    """Conjugating the sigma-tilted sample by sigma matches the all-ones tilt
    in distribution; pooled first and second moments agree within 3 SE."""
    n, beta = 120, 0.3
    sigma = alternating_spins(n)
    t_sig = gauge_conjugate(sample_tilted_matrix(n, sigma, beta, SEED), sigma)
    t_one = sample_tilted_matrix(n, all_ones_spins(n), beta, SEED.stream(5))
    iu = np.triu_indices(n, 1)
    se = 1.0 / math.sqrt(iu[0].size)
    assert abs(t_sig[iu].mean() - t_one[iu].mean()) < 3 * se * math.sqrt(2)
    assert abs(t_sig[iu].var(ddof=1) - t_one[iu].var(ddof=1)) < 0.1


def test_tilted_validation():
    with pytest.raises(ValueError):
        sample_tilted_matrix(4, np.ones(3), 0.2, SEED)
    with pytest.raises(ValueError):
        sample_tilted_matrix(4, np.ones(4), -0.5, SEED)
    with pytest.raises(ValueError):
        sample_tilted_matrix(4, np.array([1.0, 0.0, 1.0, -1.0]), 0.2, SEED)


def test_power_traces_hand_values():
    assert np.allclose(power_traces(np.eye(4), 3), [4, 4, 4])
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.allclose(power_traces(swap, 4), [0, 2, 0, 2])
    h = sample_gaussian_matrix(10, SEED, hollow=True)
    assert power_traces(h, 1)[0] == 0.0


def test_power_traces_budget():
    with pytest.raises(ValueError):
        power_traces(np.eye(100), 5, flop_budget=1e3)
    with pytest.raises(ValueError):
        power_traces(np.eye(3), 0)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_frobenius_identity(seed):
    a = sample_gaussian_matrix(12, SeedSpec(77, seed))
    tr2 = power_traces(a, 2)[1]
    assert tr2 == pytest.approx(float((a * a).sum()), rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=1, max_value=6))
def test_gauge_covariance_of_traces(seed, kmax):
    a = sample_gaussian_matrix(10, SeedSpec(78, seed))
    sigma = random_spins(10, SeedSpec(79, seed))
    conj = gauge_conjugate(a, sigma)
    assert np.allclose(power_traces(conj, kmax), power_traces(a, kmax), rtol=1e-9)


def test_spin_helpers():
    assert np.array_equal(alternating_spins(4), [1, -1, 1, -1])
    s = random_spins(50, SEED)
    assert set(np.unique(s)) <= {-1.0, 1.0}
    with pytest.raises(ValueError):
        check_spins([1.0, 2.0])
    with pytest.raises(ValueError):
        check_spins(np.ones((2, 2)))


def test_matrix_text_round_trip():
    a = sample_gaussian_matrix(7, SEED)
    buf = io.StringIO()
    save_matrix_text(a, buf)
    back = load_matrix_text(io.StringIO(buf.getvalue()))
    assert np.array_equal(a, back)


def test_matrix_text_file_round_trip(tmp_path):
    a = sample_gaussian_matrix(5, SEED, hollow=True)
    path = tmp_path / "m.txt"
    save_matrix_text(a, path)
    assert np.array_equal(load_matrix_text(path), a)
    header = path.read_text().splitlines()[0]
    assert header == "5"


def test_matrix_text_validation(tmp_path):
    with pytest.raises(ValueError):
        save_matrix_text(np.arange(4.0).reshape(2, 2), io.StringIO())
    with pytest.raises(ValueError):
        load_matrix_text(io.StringIO("2\n1.0 2.0\n"))


def test_seedspec_derived_changes_master():
    d = SEED.derived(3)
    assert d.master_seed != SEED.master_seed
    assert d.stream_id == 0
    assert SEED.derived(3) == d
