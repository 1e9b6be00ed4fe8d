"""Certification and verification: estimators, budgets, reports.

Budget cross-checks deliberately recompute every term inline from the
printed formulas — separate code path, no shared helpers — and demand
log-space agreement to 1e-10.
"""

import math

import numpy as np
import pytest

from cvhet import (
    CertificationParams,
    DensityMatrix,
    EstimatorConfig,
    FockOperator,
    FockVector,
    HonestIID,
    NoisyIID,
    ParameterError,
    ProbabilityBudget,
    VerificationParams,
    certification_budget,
    certify,
    downstream_bound,
    expected_f_op,
    fidelity_estimate,
    fidelity_pure,
    p_choice,
    p_support_iid,
    run_protocol_sampling,
    sample_q,
    scaling_suggest,
    verification_budget,
    verify,
)

PLUS = FockVector(np.array([1.0, 1.0]) / np.sqrt(2))


def test_support_tail_reference_value():
    # 1.5 ln(s+1) - ln n + (s+1)^2/(n+1) at s=0, n=100
    got = p_support_iid(0, 100)
    assert got == pytest.approx(math.log(math.exp(1.0 / 101.0) / 100.0), abs=1e-12)
    with pytest.raises(ParameterError):
        p_support_iid(-1, 100)
    with pytest.raises(ParameterError):
        p_support_iid(101, 100)
    with pytest.raises(ParameterError):
        p_support_iid(0, 0)


def test_support_tail_is_vacuous_at_large_thresholds():
    # the quadratic term dominates: raising s can only weaken the bound
    assert p_support_iid(99, 100) > 0.0


def test_choice_term_is_exact_rational():
    assert p_choice(1, 1, 100) == 1.0 / 24.0
    assert p_choice(2, 3, 50) == 2 * 13 / 38
    with pytest.raises(ParameterError):
        p_choice(1, 25, 100)
    with pytest.raises(ParameterError):
        p_choice(0, 1, 100)


def test_fidelity_estimate_clamps():
    vac = FockVector.basis(0, cutoff=0)
    # f_vac(0, 0.1) = 10, clamped to 1 before the power
    assert fidelity_estimate([0.0], vac, 1, 0.1) == 1.0
    # single-photon target at the origin gives a negative average
    one = FockVector.basis(1, cutoff=1)
    assert fidelity_estimate([0.0], one, 2, 0.1) == 0.0
    with pytest.raises(ParameterError):
        fidelity_estimate([], vac, 1, 0.1)
    with pytest.raises(ParameterError):
        fidelity_estimate([0.0], vac, 0, 0.1)
    with pytest.raises(ParameterError):
        fidelity_estimate([0.0], vac, 1, 0.0)


def test_fidelity_estimate_zero_noise_soundness():
    # with the exact estimator mean in place of the sample mean, the
    # certified quantity sits within eps of the true fidelity power
    rng = np.random.default_rng(71)
    eps = 0.3
    for m in (1, 2, 3):
        for _ in range(20):
            dim = int(rng.integers(1, 4))
            g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
            mat = g @ g.conj().T
            mat /= np.trace(mat).real
            rho = DensityMatrix(mat, dim - 1)
            raw = rng.normal(size=dim) + 1j * rng.normal(size=dim)
            psi = FockVector(raw / np.linalg.norm(raw), dim - 1)
            kpsi = float(np.sum(np.abs(psi.amplitudes) * np.sqrt(np.arange(1, dim + 1)))) ** 2
            cfg = EstimatorConfig(eps / (m * kpsi), dim - 1)
            projector = FockOperator(
                np.outer(psi.amplitudes, psi.amplitudes.conj()), dim - 1
            )
            mean = expected_f_op(rho, projector, cfg)
            clamped = min(1.0, max(0.0, mean.real))
            truth = fidelity_pure(psi, rho)
            assert abs(clamped**m - truth**m) <= eps + 1e-9


def test_certification_params_collect_all_problems():
    with pytest.raises(ParameterError) as err:
        CertificationParams(n=0, m=0, s=1, E=-1, eps=-1.0, eps_prime=0.0)
    msg = str(err.value)
    for fragment in ("n = 0", "m = 0", "E = -1", "eps = -1.0", "eps_prime = 0.0"):
        assert fragment in msg


def test_certification_params_target_checks():
    params = CertificationParams(n=100, m=1, s=0, E=1, eps=0.05, eps_prime=0.05)
    params.validate_for(PLUS)
    with pytest.raises(ParameterError):
        params.validate_for(FockVector.basis(2, cutoff=2))  # above E
    loose = CertificationParams(n=100, m=1, s=0, E=0, eps=2.0, eps_prime=0.05)
    with pytest.raises(ParameterError):
        loose.validate_for(FockVector.basis(0, cutoff=0))  # eta = 2


def test_verification_params_invariants():
    VerificationParams(n=1000, k=100, q=10, m=1, s=1, E=1, eps=0.1, eps_prime=0.1)
    with pytest.raises(ParameterError) as err:
        VerificationParams(n=80, k=100, q=10, m=20, s=200, E=1, eps=0.1, eps_prime=0.1)
    msg = str(err.value)
    assert "q = 10 below m = 20" in msg
    assert "s = 200 outside [0, k]" in msg
    assert "8q" in msg


def test_certification_budget_cross_check():
    n, m, s, E, eps, ep = 1_000_000, 1, 0, 0, 0.05, 0.05
    params = CertificationParams(n=n, m=m, s=s, E=E, eps=eps, eps_prime=ep)
    vac = FockVector.basis(0, cutoff=0)
    budget = certification_budget(params, vac)

    # inline, helper-free recomputation
    kpsi = (abs(1.0) * math.sqrt(1.0)) ** 2
    cpsi = abs(1.0 * 1.0) * (eps / m) ** 0 * kpsi**1 * 1.0  # single (0,0) term
    hoeff = math.log(2.0) - n * eps ** (2 + 2 * E) * ep**2 / (
        2.0 * m ** (4 + 2 * E) * cpsi**2
    )
    support = math.log((s + 1.0) ** 1.5 / n) + (s + 1.0) ** 2 / (n + 1.0)
    assert abs(budget.terms["hoeffding"] - hoeff) < 1e-10
    assert abs(budget.terms["support"] - support) < 1e-10
    total = math.log(math.exp(hoeff) + math.exp(support))
    assert abs(budget.total_log - total) < 1e-10
    assert budget.total_clamped == pytest.approx(math.exp(total), rel=1e-12)
    assert budget.vacuous == ()


def test_certification_budget_underflow_guard():
    params = CertificationParams(
        n=10**400, m=1, s=10, E=0, eps=0.5, eps_prime=0.5
    )
    vac = FockVector.basis(0, cutoff=0)
    budget = certification_budget(params, vac)
    assert budget.terms["hoeffding"] == -math.inf
    assert budget.total_log == budget.terms["support"]


def test_verification_budget_cross_check():
    n, k, q, m, s, E = 1000, 100, 10, 1, 1, 1
    eps = ep = 0.1
    params = VerificationParams(n=n, k=k, q=q, m=m, s=s, E=E, eps=eps, eps_prime=ep)
    budget = verification_budget(params, PLUS)

    # frozen reference: q^{(E+1)^2/2} exp(-2q(q+1)/n) = 100 e^{-0.22}
    assert abs(budget.terms["deFinetti"] - (math.log(100.0) - 0.22)) < 1e-12

    # inline recomputation of all four terms
    a = abs(PLUS.amplitudes[0])
    b = abs(PLUS.amplitudes[1])
    kpsi = (a * 1.0 + b * math.sqrt(2.0)) ** 2
    ratio = eps / m
    mkl = lambda kk, ll: math.sqrt(
        2.0 ** abs(ll - kk) * math.comb(max(kk, ll), min(kk, ll))
    )
    cpsi = sum(
        [a, b][kk] * [a, b][ll] * ratio ** (E - 0.5 * (kk + ll))
        * kpsi ** (1.0 + 0.5 * (kk + ll)) * mkl(kk, ll)
        for kk in range(2)
        for ll in range(2)
    )
    support = math.log(8.0 * k**1.5) - (k / 9.0) * (q / n - 2.0 * s / k) ** 2
    definetti = ((E + 1) ** 2 / 2.0) * math.log(q) - 2.0 * q * (q + 1.0) / n
    choice = math.log(m * (4.0 * q + m - 1.0) / (n - 4.0 * q))
    diff = eps ** (1 + E) * ep / cpsi - 8.0 * q * m ** (2 + E) / (n - 4 * q - m)
    assert diff <= 0.0  # desk-scale parameters: deviation term is vacuous
    assert budget.terms["hoeffding"] == 0.0
    assert budget.vacuous == ("hoeffding",)
    assert abs(budget.terms["support"] - support) < 1e-10
    assert abs(budget.terms["deFinetti"] - definetti) < 1e-10
    assert abs(budget.terms["choice"] - choice) < 1e-10
    assert budget.total_clamped == 1.0


def test_verification_budget_huge_n_stays_finite():
    params = VerificationParams(
        n=10**12, k=10**12, q=10**6, m=2, s=1, E=1, eps=0.5, eps_prime=0.5
    )
    budget = verification_budget(params, PLUS)
    assert all(math.isfinite(v) for v in budget.terms.values())
    assert math.isfinite(budget.total_log)
    # the deviation gap is positive here (no vacuity flag), yet the
    # subset-choice binomial factor still dominates: the term exceeds 1
    assert budget.vacuous == ()
    assert budget.terms["hoeffding"] > 0.0


def test_budget_clamping():
    budget = ProbabilityBudget.from_terms({"a": math.log(0.5), "b": 0.3})
    assert budget.total_clamped == 1.0
    clamped = budget.clamped_terms()
    assert clamped["a"] == pytest.approx(0.5, rel=1e-12)
    assert clamped["b"] == 1.0


def test_certify_separates_honest_from_orthogonal():
    n, s = 100_000, 6000
    params = CertificationParams(n=n, m=1, s=s, E=3, eps=0.05, eps_prime=0.05)
    vac = FockVector.basis(0, cutoff=0)

    honest = certify(sample_q(vac, n, seed=1), vac, params)
    assert honest.passed
    assert honest.estimate >= 0.9
    assert honest.radius == pytest.approx(0.1, abs=1e-15)

    bad_state = DensityMatrix.from_pure(FockVector.basis(1, cutoff=1))
    bad = certify(sample_q(bad_state, n, seed=2), vac, params)
    assert not bad.passed  # support tail of |1><1| crosses s
    assert bad.estimate <= 0.1

    with pytest.raises(ParameterError):
        certify(np.zeros(10, dtype=complex), vac, params)  # length != n


def test_verify_end_to_end_bookkeeping():
    params = VerificationParams(
        n=200, k=50, q=2, m=2, s=10, E=1, eps=0.3, eps_prime=0.3
    )
    run = run_protocol_sampling(HonestIID(PLUS), n=200, k=50, q=2, m=2, seed=19)
    report = verify(run, PLUS, params)
    sup = run.support_samples
    assert report.r == int(np.count_nonzero(sup.real**2 + sup.imag**2 > 1.0))
    assert report.passed == (report.r <= 10)
    assert 0.0 <= report.estimate <= 1.0
    # deFinetti log-term is positive at this scale, so it clamps to 1
    assert report.budget.terms["deFinetti"] > 0.0
    assert report.radius == pytest.approx(0.3 + 0.3 + 1.0, abs=1e-15)


def test_verify_checks_sample_counts():
    params = VerificationParams(
        n=200, k=50, q=2, m=2, s=10, E=1, eps=0.3, eps_prime=0.3
    )
    run = run_protocol_sampling(HonestIID(PLUS), n=200, k=49, q=2, m=2, seed=3)
    with pytest.raises(ParameterError):
        verify(run, PLUS, params)


def test_scaling_suggest_values_and_guards():
    params = scaling_suggest(2, 0)
    assert (params.n, params.k, params.q) == (2**19, 2**19, 2**10)
    assert params.s == 1 and params.m == 2
    assert params.eps == params.eps_prime == 0.5

    with pytest.raises(ParameterError) as err:
        scaling_suggest(1, 0)  # every constant 1: invariants unsatisfiable
    assert "n - 4q - m" in str(err.value)
    assert "8q" in str(err.value)

    with pytest.raises(ParameterError):
        scaling_suggest(10**16, 0)  # ~304 decimal digits


@pytest.mark.parametrize("m", [2, 4, 8])
def test_scaled_budgets_stay_finite(m):
    params = scaling_suggest(m, 0)
    budget = verification_budget(params, FockVector.basis(0, cutoff=0))
    assert math.isfinite(budget.total_log)
    assert all(math.isfinite(v) for v in budget.terms.values())


def test_downstream_bound():
    assert downstream_bound(0.25) == 0.5
    assert downstream_bound(0.0) == 0.0
    assert downstream_bound(1.0) == 1.0
    with pytest.raises(ParameterError):
        downstream_bound(-0.1)
    with pytest.raises(ParameterError):
        downstream_bound(1.1)
