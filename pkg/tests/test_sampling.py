"""Heterodyne sampler: distributional correctness and determinism.

Distribution checks compare against the exact radial law of the Husimi
function — for a state with diagonal rho_nn the squared radius u = |alpha|^2
has CDF  F(u) = sum_n rho_nn P(n+1, u)  with P the regularized lower
incomplete gamma — using a Kolmogorov-Smirnov test at the 0.001 level
(threshold 1.9495 / sqrt(N)), so a correct sampler fails each check with
probability 1e-3.
"""

import math

import numpy as np
import pytest
from scipy.special import gammainc

from cvhet import (
    DensityMatrix,
    FockVector,
    HonestIID,
    MixtureIID,
    NoisyIID,
    ParameterError,
    SubsetSwap,
    iter_sample_chunks,
    q_eval,
    run_protocol_sampling,
    sample_q,
    support_count,
)

KS_CRITICAL = 1.9495  # alpha = 0.001


def ks_statistic(values, cdf):
    u = np.sort(np.asarray(values, dtype=float))
    f = cdf(u)
    n = u.size
    hi = np.max(np.arange(1, n + 1) / n - f)
    lo = np.max(f - np.arange(0, n) / n)
    return max(hi, lo)


def test_q_eval_known_states():
    vac = DensityMatrix.from_pure(FockVector.basis(0, cutoff=0))
    one = DensityMatrix.from_pure(FockVector.basis(1, cutoff=1))
    alpha = 0.3 + 0.4j
    u = abs(alpha) ** 2
    assert q_eval(vac, alpha) == pytest.approx(math.exp(-u) / math.pi, rel=1e-12)
    assert q_eval(one, alpha) == pytest.approx(u * math.exp(-u) / math.pi, rel=1e-12)
    assert q_eval(one, 0.0) == 0.0


def test_support_count_is_strict():
    samples = np.array([1.0 + 0.0j, 0.0j, 2.0 + 0.0j])
    assert support_count(samples, 1.0) == 1  # |1|^2 == 1 is not counted
    assert support_count(samples, 0.0) == 2
    assert support_count(np.empty(0, dtype=complex), 3.0) == 0


def test_radial_law_vacuum():
    vac = DensityMatrix.from_pure(FockVector.basis(0, cutoff=0))
    z = sample_q(vac, 100_000, seed=42)
    u = z.real**2 + z.imag**2
    stat = ks_statistic(u, lambda t: gammainc(1.0, t))
    assert stat < KS_CRITICAL / math.sqrt(u.size)


def test_radial_law_mixed_state():
    rho = DensityMatrix(np.diag([0.5, 0.3, 0.2]).astype(complex))
    z = sample_q(rho, 100_000, seed=43)
    u = z.real**2 + z.imag**2
    cdf = lambda t: 0.5 * gammainc(1.0, t) + 0.3 * gammainc(2.0, t) + 0.2 * gammainc(3.0, t)
    assert ks_statistic(u, cdf) < KS_CRITICAL / math.sqrt(u.size)


def test_radial_law_superposition():
    # coherences do not alter the radial marginal
    psi = FockVector(np.array([1.0, 1.0]) / np.sqrt(2))
    z = sample_q(psi, 100_000, seed=44)
    u = z.real**2 + z.imag**2
    cdf = lambda t: 0.5 * gammainc(1.0, t) + 0.5 * gammainc(2.0, t)
    assert ks_statistic(u, cdf) < KS_CRITICAL / math.sqrt(u.size)


def test_phase_uniform_for_fock_state():
    one = FockVector.basis(1, cutoff=1)
    z = sample_q(one, 100_000, seed=45)
    theta = np.arctan2(z.imag, z.real)
    stat = ks_statistic(theta, lambda t: (t + math.pi) / (2.0 * math.pi))
    assert stat < KS_CRITICAL / math.sqrt(theta.size)


def test_moments_fock_states():
    for n in range(4):
        z = sample_q(FockVector.basis(n, cutoff=n), 100_000, seed=50 + n)
        u = z.real**2 + z.imag**2
        se = math.sqrt((n + 1.0) / u.size)
        assert abs(np.mean(u) - (n + 1.0)) < 5.0 * se


def test_acceptance_rate_is_inverse_dimension():
    # every component accepts at exactly 1/(E+1), so a full proposal chunk
    # of size C yields Binomial(C, 1/(E+1)) samples
    chunk = 1 << 16
    blocks = list(
        iter_sample_chunks(FockVector.basis(3, cutoff=3), 30_000, seed=5, chunk_size=chunk)
    )
    p = 1.0 / 4.0
    first = blocks[0].size
    sigma = math.sqrt(chunk * p * (1.0 - p))
    assert abs(first - chunk * p) < 5.0 * sigma
    assert sum(b.size for b in blocks) == 30_000


def test_stream_and_batch_agree():
    rho = DensityMatrix(np.diag([0.7, 0.3]).astype(complex))
    batch = sample_q(rho, 5000, seed=7, chunk_size=1 << 14)
    stream = np.concatenate(
        list(iter_sample_chunks(rho, 5000, seed=7, chunk_size=1 << 14))
    )
    assert np.array_equal(batch, stream)


def test_workers_do_not_change_the_stream():
    psi = FockVector(np.array([0.6, 0.0, 0.8]))
    serial = sample_q(psi, 4000, seed=9, chunk_size=1 << 13, workers=1)
    threaded = sample_q(psi, 4000, seed=9, chunk_size=1 << 13, workers=4)
    assert np.array_equal(serial, threaded)


def test_chunk_size_is_part_of_the_stream_definition():
    psi = FockVector(np.array([0.6, 0.0, 0.8]))
    a = sample_q(psi, 1000, seed=9, chunk_size=1 << 13)
    b = sample_q(psi, 1000, seed=9, chunk_size=1 << 14)
    assert not np.array_equal(a, b)


def test_same_seed_same_samples_and_zero_count():
    psi = FockVector.basis(0, cutoff=2)
    assert np.array_equal(sample_q(psi, 100, seed=3), sample_q(psi, 100, seed=3))
    assert sample_q(psi, 0, seed=3).size == 0


def test_input_validation():
    psi = FockVector.basis(0, cutoff=0)
    with pytest.raises(ParameterError):
        sample_q(psi, -1, seed=0)
    with pytest.raises(ParameterError):
        sample_q(psi, 10, seed=-1)
    with pytest.raises(ParameterError):
        sample_q(psi, 10, seed=1.5)
    with pytest.raises(ParameterError):
        sample_q("not a state", 10, seed=0)


def test_protocol_verification_mode_bookkeeping():
    psi = FockVector(np.array([1.0, 1.0]) / np.sqrt(2))
    run = run_protocol_sampling(HonestIID(psi), n=50, k=10, q=3, m=2, seed=11)
    assert run.support_samples.size == 10
    assert run.estimate_samples.size == 50 - 12 - 2
    assert len(run.kept_descriptor) == 2
    assert all(d is psi for d in run.kept_descriptor)
    assert run.rng_seed == 11


def test_protocol_certification_mode_bookkeeping():
    psi = FockVector.basis(0, cutoff=1)
    run = run_protocol_sampling(HonestIID(psi), n=30, k=0, q=0, m=4, seed=2)
    assert run.support_samples.size == 0
    assert run.estimate_samples.size == 30
    assert len(run.kept_descriptor) == 4


def test_protocol_reproducible():
    rho = DensityMatrix(np.diag([0.8, 0.2]).astype(complex))
    a = run_protocol_sampling(NoisyIID(rho), n=40, k=8, q=2, m=2, seed=21)
    b = run_protocol_sampling(NoisyIID(rho), n=40, k=8, q=2, m=2, seed=21)
    assert np.array_equal(a.support_samples, b.support_samples)
    assert np.array_equal(a.estimate_samples, b.estimate_samples)


def test_zero_fraction_swap_matches_honest_run():
    psi = FockVector(np.array([0.8, 0.6]))
    good = DensityMatrix.from_pure(psi)
    bad = DensityMatrix.from_pure(FockVector.basis(1, cutoff=1))
    honest = run_protocol_sampling(HonestIID(psi), n=60, k=12, q=3, m=3, seed=17)
    swapped = run_protocol_sampling(
        SubsetSwap(good, bad, 0.0), n=60, k=12, q=3, m=3, seed=17
    )
    assert np.array_equal(honest.support_samples, swapped.support_samples)
    assert np.array_equal(honest.estimate_samples, swapped.estimate_samples)


def test_full_fraction_swap_keeps_only_bad_copies():
    good = DensityMatrix.from_pure(FockVector.basis(0, cutoff=1))
    bad = DensityMatrix.from_pure(FockVector.basis(1, cutoff=1))
    run = run_protocol_sampling(
        SubsetSwap(good, bad, 1.0), n=30, k=6, q=2, m=2, seed=13
    )
    assert all(d is bad for d in run.kept_descriptor)


def test_mixture_adversary_draws_one_component_per_run():
    vac = DensityMatrix.from_pure(FockVector.basis(0, cutoff=1))
    one = DensityMatrix.from_pure(FockVector.basis(1, cutoff=1))
    adv = MixtureIID(weights=[0.5, 0.5], states=[vac, one])
    a = run_protocol_sampling(adv, n=25, k=5, q=1, m=1, seed=31)
    b = run_protocol_sampling(adv, n=25, k=5, q=1, m=1, seed=31)
    assert np.array_equal(a.estimate_samples, b.estimate_samples)
    assert a.kept_descriptor[0] in (vac, one)


def test_mixture_validation():
    vac = DensityMatrix.from_pure(FockVector.basis(0, cutoff=0))
    with pytest.raises(ParameterError):
        MixtureIID(weights=[0.5, 0.4], states=[vac, vac])
    with pytest.raises(ParameterError):
        MixtureIID(weights=[1.5, -0.5], states=[vac, vac])
    with pytest.raises(ParameterError):
        MixtureIID(weights=[1.0], states=[])
    with pytest.raises(ParameterError):
        SubsetSwap(vac, vac, 1.2)


def test_protocol_validation():
    psi = FockVector.basis(0, cutoff=0)
    adv = HonestIID(psi)
    with pytest.raises(ParameterError):
        run_protocol_sampling(adv, n=10, k=0, q=1, m=1, seed=0)
    with pytest.raises(ParameterError):
        run_protocol_sampling(adv, n=10, k=5, q=0, m=1, seed=0)  # q < m
    with pytest.raises(ParameterError):
        run_protocol_sampling(adv, n=17, k=5, q=4, m=2, seed=0)  # no estimate left
    with pytest.raises(ParameterError):
        run_protocol_sampling(adv, n=10, k=2, q=1, m=0, seed=0)
    with pytest.raises(ParameterError):
        run_protocol_sampling(adv, n=0, k=0, q=0, m=1, seed=0)
