"""Density-matrix reconstruction from heterodyne samples.

Each element is estimated independently: rho_kl is the sample mean of
f_{|l><k|}(alpha_i, eta_kl) with the per-element precision

    eta_kl = eps / sqrt((k+1)(l+1)),

which makes every element's bias at most eps.  With n samples, all
elements up to cutoff E are simultaneously within eps + eps_prime of the
true state (entrywise) except with probability at most

    4 * sum_{0 <= k <= l <= E} exp( -n eps^{2+k+l} eps_prime^2 / (4 C_kl) ),

and required_samples_tomography inverts this bound for the smallest
sufficient n.  All bound arithmetic is done in log space; the planner's
answers stay exact far beyond n ~ 1e12.

By default every element (both triangles) is estimated independently
from the shared samples; the identity L_{k,l} = conj(L_{l,k}) then makes
rho_hat_lk agree with conj(rho_hat_kl) to arithmetic rounding (not
bit-exactly — fused-multiply-add ordering leaves ~1e-16 residue), and the
matrix is Hermitian only up to that residue.  With hermitize=True the
lower triangle is instead set to the conjugate of the upper and the
diagonal's rounding-level imaginary residue is dropped, giving an
exactly Hermitian matrix from the mathematically identical estimator.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import ParameterError
from .laguerre import (
    MAX_LAGUERRE_INDEX,
    EstimatorConfig,
    _f_elem_core,
    _log_c_kl,
    f_elem,
)

LOG4 = math.log(4.0)


@dataclass(frozen=True)
class TomographyReport:
    """Reconstruction plus its guarantee.

    With probability at least 1 - failure_prob every entry of `estimates`
    (up to the cutoff) lies within confidence_radius of the true state's
    entry.  failure_log_prob is the natural log of the union bound;
    failure_prob is its clamp to [0, 1].
    """

    estimates: np.ndarray
    cutoff: int
    epsilon: float
    epsilon_prime: float
    sample_count: int
    confidence_radius: float
    failure_log_prob: float
    failure_prob: float


def _eta_element(k, l, eps):
    return eps / math.sqrt((k + 1.0) * (l + 1.0))


def _check_precisions(eps, eps_prime):
    if eps <= 0.0:
        raise ParameterError(f"eps must be positive, got {eps}")
    if eps_prime <= 0.0:
        raise ParameterError(f"eps_prime must be positive, got {eps_prime}")


def estimate_element(samples, k, l, eps):
    """Monte-Carlo estimate of rho_kl: mean of f_{|l><k|} at precision
    eta_kl = eps/sqrt((k+1)(l+1))."""
    if eps <= 0.0:
        raise ParameterError(f"eps must be positive, got {eps}")
    cfg = EstimatorConfig(_eta_element(k, l, eps), max(k, l))
    z = np.asarray(samples, dtype=complex)
    if z.size == 0:
        raise ParameterError("no samples")
    return complex(np.mean(f_elem(l, k, z, cfg)))


def _pair_configs(cutoff, eps, hermitize):
    """EstimatorConfig per estimated element, validated against the run
    cutoff (the binding constraint is eta_00 = eps < 2/cutoff).  With
    hermitize only the upper triangle is estimated."""
    if not isinstance(cutoff, (int, np.integer)) or cutoff < 0:
        raise ParameterError(f"cutoff must be a non-negative integer, got {cutoff}")
    if cutoff > MAX_LAGUERRE_INDEX:
        raise ParameterError(
            f"cutoff {cutoff} above stability ceiling {MAX_LAGUERRE_INDEX}"
        )
    return {
        (k, l): EstimatorConfig(_eta_element(k, l, eps), int(cutoff))
        for k in range(cutoff + 1)
        for l in range(cutoff + 1)
        if not (hermitize and l < k)
    }


def tomography_stream(chunks, cutoff, eps, eps_prime, hermitize=False):
    """Reconstruct from an iterable of sample blocks without ever holding
    the full record in memory.  Same estimator as tomography_run; the two
    agree to floating-point roundoff (summation order differs)."""
    _check_precisions(eps, eps_prime)
    configs = _pair_configs(cutoff, eps, hermitize)
    dim = cutoff + 1
    sums = {pair: 0.0 + 0.0j for pair in configs}
    n_total = 0

    for block in chunks:
        z = np.asarray(block, dtype=complex)
        if z.size == 0:
            continue
        n_total += z.size
        u = z.real**2 + z.imag**2
        for (k, l), cfg in configs.items():
            sums[(k, l)] += complex(np.sum(_f_elem_core(l, k, z, u, cfg.eta)))

    if n_total == 0:
        raise ParameterError("no samples")

    estimates = np.zeros((dim, dim), dtype=complex)
    for (k, l), total in sums.items():
        estimates[k, l] = total / n_total
    if hermitize:
        for k in range(dim):
            estimates[k, k] = estimates[k, k].real
            for l in range(k + 1, dim):
                estimates[l, k] = estimates[k, l].conjugate()

    flp = failure_log_prob(n_total, cutoff, eps, eps_prime)
    return TomographyReport(
        estimates=estimates,
        cutoff=int(cutoff),
        epsilon=float(eps),
        epsilon_prime=float(eps_prime),
        sample_count=n_total,
        confidence_radius=float(eps + eps_prime),
        failure_log_prob=flp,
        failure_prob=1.0 if flp >= 0.0 else math.exp(flp),
    )


def tomography_run(samples, cutoff, eps, eps_prime, hermitize=False):
    """Reconstruct all elements up to the cutoff from one sample array."""
    z = np.asarray(samples, dtype=complex)
    return tomography_stream([z], cutoff, eps, eps_prime, hermitize=hermitize)


def failure_log_prob(n, cutoff, eps, eps_prime):
    """log of the simultaneous-deviation bound (module docstring)."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if cutoff < 0:
        raise ParameterError(f"cutoff must be >= 0, got {cutoff}")
    _check_precisions(eps, eps_prime)
    log_n = math.log(n)
    log_eps = math.log(eps)
    log_ep2 = 2.0 * math.log(eps_prime)
    terms = []
    for k in range(cutoff + 1):
        for l in range(k, cutoff + 1):
            log_arg = (
                log_n
                + (2.0 + k + l) * log_eps
                + log_ep2
                - LOG4
                - _log_c_kl(k, l)
            )
            terms.append(-math.exp(log_arg) if log_arg < 700.0 else -math.inf)
    return LOG4 + float(logsumexp(terms))


def required_samples_tomography(cutoff, eps, eps_prime, delta):
    """Smallest n whose failure bound is at most delta.

    Seeds an upper bracket by inverting the dominant (E, E) term —
    4 T exp(-n a_EE) <= delta with T the pair count — then narrows to the
    exact integer threshold (the bound is strictly decreasing in n), so
    the returned n satisfies the bound and n - 1 does not.
    """
    if not 0.0 < delta < 1.0:
        raise ParameterError(f"delta = {delta} outside the open interval (0, 1)")
    if cutoff < 0:
        raise ParameterError(f"cutoff must be >= 0, got {cutoff}")
    _check_precisions(eps, eps_prime)
    log_delta = math.log(delta)

    if failure_log_prob(1, cutoff, eps, eps_prime) <= log_delta:
        return 1

    n_terms = (cutoff + 1) * (cutoff + 2) // 2
    log_rate = (
        (2.0 + 2.0 * cutoff) * math.log(eps)
        + 2.0 * math.log(eps_prime)
        - LOG4
        - _log_c_kl(cutoff, cutoff)
    )
    log_hi = math.log(LOG4 + math.log(n_terms) - log_delta) - log_rate
    hi = int(math.ceil(math.exp(log_hi))) + 1 if log_hi < 43.0 else 2
    lo = 1
    while failure_log_prob(hi, cutoff, eps, eps_prime) > log_delta:
        lo = hi
        hi *= 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if failure_log_prob(mid, cutoff, eps, eps_prime) <= log_delta:
            hi = mid
        else:
            lo = mid
    return hi
