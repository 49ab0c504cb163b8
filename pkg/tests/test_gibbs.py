"""Thermodynamics: enumeration oracles, likelihood-ratio equivalences,
convexity and gauge symmetries, limit-law targets."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skcw.gibbs import (
    ModelParams,
    clt_targets,
    curie_weiss_tau,
    decomposition_residual,
    exact_log_partition,
    free_energy,
    hamiltonian,
    interaction_matrix,
    rn_log_ratio,
    second_moment_target,
)
from skcw.randmat import SeedSpec, gauge_conjugate, random_spins, sample_gaussian_matrix


def spins_iter(n):
    for bits in itertools.product((-1.0, 1.0), repeat=n):
        yield np.array(bits)


def mixture_log_ratio_oracle(a: np.ndarray, params: ModelParams) -> float:
    """Independent route to the log likelihood ratio: average the per-spin
    tilted densities over the hypercube, then divide by the mean-field
    normalizer.  Enumerates all 2^n spin vectors directly."""
    n = params.n
    beta = params.beta
    iu = np.triu_indices(n, 1)
    vals = []
    for sigma in spins_iter(n):
        pair = float(((sigma[:, None] * sigma[None, :]) * a)[iu].sum())
        vals.append(
            2 * beta / math.sqrt(n) * pair
            - 2 * beta**2 / n * len(iu[0])
            + beta * params.J / n * sigma.sum() ** 2
        )
    vals = np.array(vals)
    top = vals.max()
    log_mixture = top + math.log(np.exp(vals - top).sum()) - n * math.log(2)
    return log_mixture - math.log(curie_weiss_tau(n, beta * params.J))


# --- Hamiltonian -----------------------------------------------------------------


def test_hamiltonian_n1():
    a = np.array([[1.7]])
    p = ModelParams(beta=0.3, J=2.0, Jprime=0.5, n=1)
    assert hamiltonian(a, p, np.array([1.0])) == pytest.approx(1.7 + 0.5)
    assert hamiltonian(a, p, np.array([-1.0])) == pytest.approx(1.7 + 0.5)


def test_hamiltonian_n2_hand():
    w = 0.9
    a = np.array([[0.0, w], [w, 0.0]])
    p = ModelParams(beta=0.2, J=0.0, Jprime=0.0, n=2)
    assert hamiltonian(a, p, np.ones(2)) == pytest.approx(2 * w / math.sqrt(2))


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=0, max_value=5000), st.integers(min_value=0, max_value=7))
def test_hamiltonian_flip_identity(seed, i):
    n = 8
    a = sample_gaussian_matrix(n, SeedSpec(31, seed))
    p = ModelParams(beta=0.3, J=0.7, Jprime=0.4, n=n)
    sigma = random_spins(n, SeedSpec(32, seed))
    m = interaction_matrix(a, p)
    flipped = sigma.copy()
    flipped[i] = -flipped[i]
    delta = hamiltonian(a, p, flipped) - hamiltonian(a, p, sigma)
    local = -4.0 * sigma[i] * (m[i] @ sigma - m[i, i] * sigma[i])
    assert delta == pytest.approx(local, rel=1e-9, abs=1e-9)


def test_hamiltonian_dimension_mismatch():
    a = sample_gaussian_matrix(4, SeedSpec(33, 0))
    with pytest.raises(ValueError):
        hamiltonian(a, ModelParams(beta=0.1, n=4), np.ones(3))
    with pytest.raises(ValueError):
        hamiltonian(a, ModelParams(beta=0.1, n=5), np.ones(5))


# --- exact log partition -----------------------------------------------------------


def test_log_partition_zero_beta():
    a = sample_gaussian_matrix(9, SeedSpec(34, 0))
    p = ModelParams(beta=0.0, J=1.0, Jprime=0.3, n=9)
    for method in ("split", "gray", "naive"):
        assert exact_log_partition(a, p, method=method) == pytest.approx(0.0, abs=1e-13)


def test_log_partition_n2_logcosh():
    w = 0.8
    a = np.array([[0.0, w], [w, 0.0]])
    p = ModelParams(beta=0.35, J=0.0, Jprime=0.0, n=2)
    expect = math.log(math.cosh(2 * 0.35 * w / math.sqrt(2)))
    for method in ("split", "gray", "naive"):
        assert exact_log_partition(a, p, method=method) == pytest.approx(expect, rel=1e-12)


def test_gray_matches_naive_twenty_instances():
    rng_sizes = [4, 6, 8, 10, 12] * 4
    for idx, n in enumerate(rng_sizes):
        a = sample_gaussian_matrix(n, SeedSpec(35, idx))
        p = ModelParams(beta=0.25, J=1.0, Jprime=0.2, n=n)
        g = exact_log_partition(a, p, method="gray")
        v = exact_log_partition(a, p, method="naive")
        assert g == pytest.approx(v, rel=1e-10)


def test_split_matches_gray():
    for idx, n in enumerate([5, 9, 13, 14]):
        a = sample_gaussian_matrix(n, SeedSpec(36, idx))
        p = ModelParams(beta=0.3, J=0.5, Jprime=0.0, n=n)
        assert exact_log_partition(a, p, method="split") == pytest.approx(
            exact_log_partition(a, p, method="gray"), rel=1e-11
        )


def test_log_partition_n1():
    a = np.array([[0.4]])
    p = ModelParams(beta=0.25, J=0.0, Jprime=0.7, n=1)
    assert exact_log_partition(a, p) == pytest.approx(0.25 * (0.4 + 0.7))


def test_gauge_invariance_of_log_partition():
    """The hypercube bijection sigma -> sigma_hat * sigma maps the SK energy
    of diag(s)A diag(s) back onto that of A, so Z is invariant for J = 0;
    the uniform coupling (J/n)(sum sigma)^2 breaks the symmetry, so J must
    vanish here (J' is free: the diagonal enters as a constant)."""
    n = 10
    a = sample_gaussian_matrix(n, SeedSpec(37, 0))
    p = ModelParams(beta=0.3, J=0.0, Jprime=0.4, n=n)
    base = exact_log_partition(a, p)
    for seed in range(5):
        sigma = random_spins(n, SeedSpec(38, seed))
        assert exact_log_partition(gauge_conjugate(a, sigma), p) == pytest.approx(
            base, rel=1e-10
        )


def test_gauge_invariance_fails_with_uniform_coupling():
    """Documented limit of the symmetry: with J != 0 the conjugated matrix
    has a genuinely different partition function."""
    n = 10
    a = sample_gaussian_matrix(n, SeedSpec(37, 0))
    p = ModelParams(beta=0.3, J=0.8, Jprime=0.1, n=n)
    sigma = random_spins(n, SeedSpec(38, 0))
    base = exact_log_partition(a, p)
    conj = exact_log_partition(gauge_conjugate(a, sigma), p)
    assert abs(conj - base) > 1e-3


def test_log_partition_convexity_in_beta():
    a = sample_gaussian_matrix(10, SeedSpec(39, 0))
    betas = [0.05, 0.15, 0.25, 0.35, 0.45]
    vals = [
        exact_log_partition(a, ModelParams(beta=b, J=1.0, Jprime=0.0, n=10))
        for b in betas
    ]
    for i in range(len(betas) - 2):
        mid = exact_log_partition(
            a, ModelParams(beta=(betas[i] + betas[i + 2]) / 2, J=1.0, Jprime=0.0, n=10)
        )
        assert mid <= (vals[i] + vals[i + 2]) / 2 + 1e-12


def test_free_energy_scaling():
    a = sample_gaussian_matrix(11, SeedSpec(40, 0))
    p = ModelParams(beta=0.2, J=0.4, Jprime=0.0, n=11)
    assert 11 * free_energy(a, p) == pytest.approx(
        exact_log_partition(a, p), rel=1e-14
    )


def test_enumeration_bound():
    a = np.zeros((29, 29))
    with pytest.raises(ValueError):
        exact_log_partition(a, ModelParams(beta=0.1, n=29))
    with pytest.raises(ValueError):
        exact_log_partition(np.zeros((23, 23)), ModelParams(beta=0.1, n=23), method="naive")
    with pytest.raises(ValueError):
        exact_log_partition(
            sample_gaussian_matrix(4, SeedSpec(1, 1)) * math.inf,
            ModelParams(beta=0.1, n=4),
        )


# --- mean-field normalizer ------------------------------------------------------------


def test_tau_hand_values():
    assert curie_weiss_tau(7, 0.0) == pytest.approx(1.0, rel=1e-14)
    assert curie_weiss_tau(2, 0.25) == pytest.approx(0.5 + 0.5 * math.exp(0.5), rel=1e-12)
    assert abs(curie_weiss_tau(10_000, 0.25) - 1 / math.sqrt(0.5)) < 1e-2


# --- likelihood ratio -------------------------------------------------------------------


def test_rn_zero_beta():
    a = sample_gaussian_matrix(7, SeedSpec(41, 0))
    assert rn_log_ratio(a, ModelParams(beta=0.0, J=1.0, Jprime=0.2, n=7)) == pytest.approx(
        0.0, abs=1e-12
    )


def test_rn_matches_mixture_oracle():
    count = 0
    for n in (4, 6, 8, 10, 12):
        for seed in range(4):
            a = sample_gaussian_matrix(n, SeedSpec(42, 100 * n + seed))
            p = ModelParams(beta=0.25, J=0.5, Jprime=0.3, n=n)
            assert rn_log_ratio(a, p) == pytest.approx(
                mixture_log_ratio_oracle(a, p), abs=1e-9
            )
            count += 1
    assert count == 20


def test_rn_density_integrates_to_one():
    n, reps = 12, 1500
    p = ModelParams(beta=0.25, J=0.5, Jprime=0.0, n=n)
    ys = np.array(
        [
            math.exp(rn_log_ratio(sample_gaussian_matrix(n, SeedSpec(43, r)), p))
            for r in range(reps)
        ]
    )
    se = ys.std(ddof=1) / math.sqrt(reps)
    assert abs(ys.mean() - 1.0) < 3 * se


def exact_second_moment_oracle(n: int, beta: float, j: float) -> float:
    """E[(dQ/dP)^2] by exact enumeration: squaring the mixture and taking
    the Gaussian expectation leaves E over two independent uniform spin
    vectors of exp(2 beta^2 T^2/n + beta J U^2/n + beta J V^2/n) with
    T the overlap and U, V the magnetizations, times e^{-2 beta^2}/tau_n^2.
    Grouping sigma' by its plus-counts on and off sigma's plus set gives a
    triple binomial sum."""
    a = 2 * beta**2 / n
    b = beta * j / n
    terms = []
    for p in range(n + 1):
        lbp = math.lgamma(n + 1) - math.lgamma(p + 1) - math.lgamma(n - p + 1)
        u2 = (2 * p - n) ** 2
        for x in range(p + 1):
            lbx = math.lgamma(p + 1) - math.lgamma(x + 1) - math.lgamma(p - x + 1)
            for y in range(n - p + 1):
                lby = (
                    math.lgamma(n - p + 1)
                    - math.lgamma(y + 1)
                    - math.lgamma(n - p - y + 1)
                )
                t = 2 * x - 2 * y + n - 2 * p
                v = 2 * (x + y) - n
                terms.append(
                    lbp + lbx + lby - 2 * n * math.log(2)
                    + a * t * t + b * u2 + b * v * v
                )
        # grouped by sigma's plus-count p; sigma' split as (x, y)
    terms = np.array(terms)
    top = terms.max()
    total = math.exp(top) * float(np.exp(terms - top).sum())
    return math.exp(-2 * beta**2) / curie_weiss_tau(n, beta * j) ** 2 * total


@pytest.mark.slow
def test_rn_second_moment_trend():
    """E[(dQ/dP)^2] is finite, exceeds 1, and moves toward
    exp(-2 beta^2)/sqrt(1-4 beta^2) as n grows.  The movement is checked on
    the exact finite-n values (the drift from n=8 to n=16 is ~1e-3, below
    Monte Carlo resolution at any reasonable replicate count); the sampled
    second moments must agree with the exact values within 4 SE."""
    beta, j = 0.25, 0.5
    target = second_moment_target(beta)
    gaps = [abs(exact_second_moment_oracle(n, beta, j) - target) for n in (8, 12, 16)]
    assert gaps[0] > gaps[1] > gaps[2]
    for n in (8, 12, 16):
        p = ModelParams(beta=beta, J=j, Jprime=0.0, n=n)
        ys = np.array(
            [
                math.exp(rn_log_ratio(sample_gaussian_matrix(n, SeedSpec(44 + n, r)), p))
                for r in range(5000)
            ]
        )
        second = float((ys**2).mean())
        se = float((ys**2).std(ddof=1) / math.sqrt(ys.size))
        assert math.isfinite(second) and second > 1.0
        assert abs(second - exact_second_moment_oracle(n, beta, j)) < 4 * se


# --- limit-law targets -----------------------------------------------------------------


def test_clt_targets_values():
    t = clt_targets(ModelParams(beta=0.25, J=1.0, Jprime=0.0, n=20))
    assert t.limit == pytest.approx(0.0625)
    assert t.mean == pytest.approx(0.0246531, abs=1e-7)
    assert t.variance == pytest.approx(0.0813410, abs=1e-7)


def test_clt_targets_zero_beta_limit():
    t = clt_targets(ModelParams(beta=0.0, J=1.0, Jprime=0.4, n=5))
    assert (t.limit, t.mean, t.variance) == (0.0, 0.0, 0.0)


def test_clt_targets_jprime_equals_j():
    beta, j = 0.3, 1.2
    t = clt_targets(ModelParams(beta=beta, J=j, Jprime=j, n=5))
    expect = -0.5 * math.log(1 - 2 * beta * j) + 0.25 * math.log(1 - 4 * beta**2)
    assert t.mean == pytest.approx(expect, rel=1e-12)


def test_clt_targets_regime_violation():
    with pytest.raises(ValueError):
        clt_targets(ModelParams(beta=0.6, J=0.1, n=5))
    with pytest.raises(ValueError):
        clt_targets(ModelParams(beta=0.4, J=2.0, n=5))


def test_model_params_validation():
    with pytest.raises(ValueError):
        ModelParams(beta=-0.1, n=3)
    with pytest.raises(ValueError):
        ModelParams(beta=0.1, n=0)
    assert ModelParams(beta=0.49, J=1.0, n=4).paramagnetic
    assert not ModelParams(beta=0.1, J=6.0, n=4).paramagnetic


# --- decomposition ---------------------------------------------------------------------


def test_decomposition_residual_zero_beta():
    a = sample_gaussian_matrix(10, SeedSpec(45, 0))
    p = ModelParams(beta=0.0, J=0.5, Jprime=0.1, n=10)
    assert decomposition_residual(a, p, 4) == pytest.approx(0.0, abs=1e-13)


def test_decomposition_residual_accepts_precomputed_logz():
    a = sample_gaussian_matrix(10, SeedSpec(46, 0))
    p = ModelParams(beta=0.25, J=0.5, Jprime=0.0, n=10)
    lz = exact_log_partition(a, p)
    assert decomposition_residual(a, p, 4, log_z=lz) == pytest.approx(
        decomposition_residual(a, p, 4), rel=1e-12
    )


def test_decomposition_residual_is_small():
    p = ModelParams(beta=0.25, J=0.5, Jprime=0.0, n=14)
    res = [
        decomposition_residual(sample_gaussian_matrix(14, SeedSpec(47, r)), p, 4)
        for r in range(50)
    ]
    assert np.var(res, ddof=1) < 0.02


# --- second moment target ----------------------------------------------------------------


def series_second_moment_oracle(beta: float) -> float:
    total = 0.0
    for k in range(2, 4000):
        total += (2 * beta) ** (2 * k) / (2 * k)
    return math.exp(total)


def test_second_moment_values():
    assert second_moment_target(0.0) == pytest.approx(1.0)
    assert second_moment_target(0.25) == pytest.approx(
        math.exp(-0.125) / math.sqrt(0.75), rel=1e-12
    )
    assert second_moment_target(0.25) == pytest.approx(1.019020, abs=1e-6)


@pytest.mark.parametrize("beta", [0.1, 0.25, 0.3, 0.45])
def test_second_moment_series_agreement(beta):
    assert second_moment_target(beta) == pytest.approx(
        series_second_moment_oracle(beta), rel=1e-10
    )


def test_second_moment_regime():
    with pytest.raises(ValueError):
        second_moment_target(0.5)
