"""Certification and verification post-processing.

Certification (i.i.d. promise): from n heterodyne samples of identically
prepared copies, estimate the fidelity of m further copies with a target
pure state Psi and bound the failure probability of that claim.

Verification (no promise): of n + k subsystems, k are support-tested,
4q discarded, n - 4q - m measured for the fidelity estimate and m kept;
a four-term probability budget covers the support tail, the reduction
to almost-i.i.d. behaviour (de Finetti), the random choice of kept
positions, and the Hoeffding deviation of the estimate.

Every probability is carried in natural-log space; clamping to [0, 1]
happens only at the reporting edge.  At desk-scale parameters the
verification budget exceeds 1 — the raw log values are the meaningful
output, and the protocol's guarantees only bite at the asymptotic
parameter scalings (see scaling_suggest).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np
from scipy.special import logsumexp

from .errors import ParameterError
from .fock import FockVector
from .laguerre import EstimatorConfig, c_psi, f_pure, k_const_pure
from .logmath import log_binom
from .sampling import ProtocolSamples, support_count

LOG2 = math.log(2.0)
LOG8 = math.log(8.0)


# ---------------------------------------------------------------------------
# parameter records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CertificationParams:
    """n measured copies certify m further copies against threshold s on
    the support test over energy cutoff E."""

    n: int
    m: int
    s: int
    E: int
    eps: float
    eps_prime: float

    def __post_init__(self):
        problems = []
        if self.n < 1:
            problems.append(f"n = {self.n} < 1")
        if self.m < 1:
            problems.append(f"m = {self.m} < 1")
        if not 0 <= self.s <= self.n:
            problems.append(f"s = {self.s} outside [0, n]")
        if self.E < 0:
            problems.append(f"E = {self.E} < 0")
        if self.eps <= 0.0:
            problems.append(f"eps = {self.eps} <= 0")
        if self.eps_prime <= 0.0:
            problems.append(f"eps_prime = {self.eps_prime} <= 0")
        if problems:
            raise ParameterError("; ".join(problems))

    def validate_for(self, psi: FockVector) -> None:
        """Target-dependent checks: Psi fits under E and the estimator
        precision eta = eps/(m K_Psi) is in its validity domain."""
        if psi.cutoff > self.E:
            raise ParameterError(
                f"target cutoff {psi.cutoff} exceeds support cutoff E = {self.E}"
            )
        EstimatorConfig(self.eps / (self.m * k_const_pure(psi)), psi.cutoff)


@dataclass(frozen=True)
class VerificationParams:
    """Free parameters of the verification protocol."""

    n: int
    k: int
    q: int
    m: int
    s: int
    E: int
    eps: float
    eps_prime: float

    def __post_init__(self):
        problems = []
        if self.k < 1:
            problems.append(f"k = {self.k} < 1")
        if self.m < 1:
            problems.append(f"m = {self.m} < 1")
        if self.q < self.m:
            problems.append(f"q = {self.q} below m = {self.m}")
        if not 0 <= self.s <= self.k:
            problems.append(f"s = {self.s} outside [0, k]")
        if self.n - 4 * self.q - self.m < 1:
            problems.append(
                f"n - 4q - m = {self.n - 4 * self.q - self.m} < 1"
            )
        if not self.n > 8 * self.q:
            problems.append(f"n = {self.n} not above 8q = {8 * self.q}")
        if self.E < 0:
            problems.append(f"E = {self.E} < 0")
        if self.eps <= 0.0:
            problems.append(f"eps = {self.eps} <= 0")
        if self.eps_prime <= 0.0:
            problems.append(f"eps_prime = {self.eps_prime} <= 0")
        if problems:
            raise ParameterError("; ".join(problems))

    def validate_for(self, psi: FockVector) -> None:
        if psi.cutoff > self.E:
            raise ParameterError(
                f"target cutoff {psi.cutoff} exceeds support cutoff E = {self.E}"
            )
        EstimatorConfig(self.eps / (self.m * k_const_pure(psi)), psi.cutoff)


@dataclass(frozen=True)
class ProbabilityBudget:
    """Named log-space failure terms and their log-sum-exp total."""

    terms: Dict[str, float]
    total_log: float
    total_clamped: float
    vacuous: Tuple[str, ...] = ()

    @classmethod
    def from_terms(cls, terms, vacuous=()):
        total_log = float(logsumexp(list(terms.values())))
        return cls(
            terms=dict(terms),
            total_log=total_log,
            total_clamped=1.0 if total_log >= 0.0 else math.exp(total_log),
            vacuous=tuple(vacuous),
        )

    def clamped_terms(self):
        """Per-term probabilities clamped to [0, 1] for reporting."""
        return {
            name: (1.0 if lg >= 0.0 else math.exp(lg))
            for name, lg in self.terms.items()
        }


@dataclass(frozen=True)
class CertifyReport:
    params: CertificationParams
    r: int
    passed: bool
    estimate: float
    radius: float
    budget: ProbabilityBudget


@dataclass(frozen=True)
class VerifyReport:
    params: VerificationParams
    r: int
    passed: bool
    estimate: float
    radius: float
    budget: ProbabilityBudget


# ---------------------------------------------------------------------------
# estimators and budget terms
# ---------------------------------------------------------------------------


def fidelity_estimate(samples, psi: FockVector, m: int, eps: float) -> float:
    """[(1/n) sum_i f_Psi(alpha_i, eps/(m K_Psi))]^m, base clamped to [0, 1].

    The upper clamp keeps the power from amplifying estimates beyond the
    physical range; the lower clamp guards even powers of statistically
    possible negative averages.
    """
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")
    if eps <= 0.0:
        raise ParameterError(f"eps must be positive, got {eps}")
    cfg = EstimatorConfig(eps / (m * k_const_pure(psi)), psi.cutoff)
    z = np.asarray(samples, dtype=complex)
    if z.size == 0:
        raise ParameterError("no samples")
    base = float(np.mean(f_pure(psi, z, cfg)))
    return min(1.0, max(0.0, base)) ** m


def p_support_iid(s: int, n: int) -> float:
    """log[(s+1)^{3/2}/n] + (s+1)^2/(n+1): failure log-probability of the
    i.i.d. support test at threshold s over n samples."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if not 0 <= s <= n:
        raise ParameterError(f"s = {s} outside [0, n]")
    return 1.5 * math.log(s + 1.0) - math.log(n) + ((s + 1) * (s + 1)) / (n + 1)


def p_choice(m: int, q: int, n: int) -> float:
    """Linear-space choice term m(4q + m - 1)/(n - 4q): exact integer
    arithmetic and a single correctly-rounded division, so small rational
    values (e.g. 1/24) are reproduced bit-exactly."""
    if n - 4 * q <= 0:
        raise ParameterError(f"n - 4q = {n - 4 * q} must be positive")
    if m < 1 or q < 0:
        raise ParameterError(f"need m >= 1 and q >= 0, got m = {m}, q = {q}")
    return m * (4 * q + m - 1) / (n - 4 * q)


def certification_budget(params: CertificationParams, psi: FockVector) -> ProbabilityBudget:
    """Two-term budget: support tail and Hoeffding deviation,

        P_hoeffding = 2 exp[-n eps^{2+2E} eps'^2 / (2 m^{4+2E} C_Psi^2)]

    with C_Psi evaluated on Psi padded to the support cutoff E.
    """
    params.validate_for(psi)
    cpsi = c_psi(psi.padded(params.E), params.eps, params.m)
    log_arg = (
        math.log(params.n)
        + (2.0 + 2.0 * params.E) * math.log(params.eps)
        + 2.0 * math.log(params.eps_prime)
        - LOG2
        - (4.0 + 2.0 * params.E) * math.log(params.m)
        - 2.0 * math.log(cpsi)
    )
    hoeffding = LOG2 - (math.exp(log_arg) if log_arg < 700.0 else math.inf)
    terms = {
        "support": p_support_iid(params.s, params.n),
        "hoeffding": hoeffding,
    }
    return ProbabilityBudget.from_terms(terms)


def verification_budget(params: VerificationParams, psi: FockVector) -> ProbabilityBudget:
    """Four-term budget of the verification protocol, entirely from the
    parameters (no samples needed) — safe for n up to 1e12 and beyond."""
    params.validate_for(psi)
    n, k, q, m, s, E = params.n, params.k, params.q, params.m, params.s, params.E
    eps, eps_prime = params.eps, params.eps_prime

    support = (
        LOG8 + 1.5 * math.log(k) - (k / 9.0) * (q / n - 2.0 * s / k) ** 2
    )
    definetti = ((E + 1) ** 2 / 2.0) * math.log(q) - 2.0 * q * (q + 1.0) / n
    choice = math.log(p_choice(m, q, n))

    cpsi = c_psi(psi.padded(E), eps, m)
    diff = (
        eps ** (1 + E) * eps_prime / cpsi
        - 8.0 * q * m ** (2 + E) / (n - 4 * q - m)
    )
    vacuous = ()
    if diff <= 0.0:
        hoeffding = 0.0
        vacuous = ("hoeffding",)
    else:
        hoeffding = (
            LOG2
            + log_binom(n - 4 * q, 4 * q)
            - ((n - 8.0 * q) / (2.0 * m ** (4 + 2 * E))) * diff * diff
        )
    terms = {
        "support": support,
        "deFinetti": definetti,
        "choice": choice,
        "hoeffding": hoeffding,
    }
    return ProbabilityBudget.from_terms(terms, vacuous=vacuous)


# ---------------------------------------------------------------------------
# protocols
# ---------------------------------------------------------------------------


def certify(samples, psi: FockVector, params: CertificationParams) -> CertifyReport:
    """Support test plus fidelity estimate on n i.i.d. samples: the claim
    is that m further copies have fidelity >= estimate - radius with Psi,
    except with the budgeted probability."""
    z = np.asarray(samples, dtype=complex)
    if z.size != params.n:
        raise ParameterError(
            f"sample count {z.size} does not match params.n = {params.n}"
        )
    budget = certification_budget(params, psi)
    r = support_count(z, params.E)
    estimate = fidelity_estimate(z, psi, params.m, params.eps)
    return CertifyReport(
        params=params,
        r=r,
        passed=r <= params.s,
        estimate=estimate,
        radius=params.eps + params.eps_prime,
        budget=budget,
    )


def verify(protocol_samples: ProtocolSamples, psi: FockVector, params: VerificationParams) -> VerifyReport:
    """Post-process one verification run (see run_protocol_sampling).

    The radius follows the guarantee statement: eps + eps_prime plus the
    (clamped) de Finetti term — at desk-scale parameters it exceeds 1 and
    is reported as-is.
    """
    budget = verification_budget(params, psi)
    n_estimate = params.n - 4 * params.q - params.m
    sup = np.asarray(protocol_samples.support_samples, dtype=complex)
    est = np.asarray(protocol_samples.estimate_samples, dtype=complex)
    if sup.size != params.k:
        raise ParameterError(
            f"support sample count {sup.size} does not match k = {params.k}"
        )
    if est.size != n_estimate:
        raise ParameterError(
            f"estimate sample count {est.size} does not match "
            f"n - 4q - m = {n_estimate}"
        )
    r = support_count(sup, params.E)
    estimate = fidelity_estimate(est, psi, params.m, params.eps)
    definetti_log = budget.terms["deFinetti"]
    definetti_prob = 1.0 if definetti_log >= 0.0 else math.exp(definetti_log)
    return VerifyReport(
        params=params,
        r=r,
        passed=r <= params.s,
        estimate=estimate,
        radius=params.eps + params.eps_prime + definetti_prob,
        budget=budget,
    )


def scaling_suggest(m: int, E: int) -> VerificationParams:
    """The asymptotic parameter scalings with every big-O constant set to
    1: n = k = m^{19+8E}, q = m^{10+4E}, s = 1, eps = eps_prime = 1/m.

    The constants are honest placeholders — the returned parameters only
    satisfy the protocol invariants for m >= 2, and the budget they give
    shows directly how far from practical the guarantee regime sits.
    """
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")
    if E < 0:
        raise ParameterError(f"E must be >= 0, got {E}")
    magnitude = (19 + 8 * E) * math.log10(m) if m > 1 else 0.0
    if magnitude > 300.0:
        raise ParameterError(
            f"scaled n = m^{19 + 8 * E} would have about {magnitude:.0f} "
            f"decimal digits; beyond representable budget arithmetic"
        )
    return VerificationParams(
        n=m ** (19 + 8 * E),
        k=m ** (19 + 8 * E),
        q=m ** (10 + 4 * E),
        m=m,
        s=1,
        E=E,
        eps=1.0 / m,
        eps_prime=1.0 / m,
    )


def downstream_bound(beta: float) -> float:
    """Total-variation deviation bound sqrt(beta) for any computation run
    on a verified state accepted with failure budget beta."""
    if not 0.0 <= beta <= 1.0:
        raise ParameterError(f"beta = {beta} outside [0, 1]")
    return math.sqrt(beta)
