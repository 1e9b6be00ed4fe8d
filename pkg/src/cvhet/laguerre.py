"""Laguerre-2D polynomials, the phase-space estimator f, and its constants.

The estimator of an operator A with bounded support is

    f_A(z, eta) = (1/eta) e^{(1-1/eta)|z|^2}
                  sum_{k,l<=E} A_kl eta^{-(k+l)/2} L_{k,l}(z/sqrt(eta))

where L_{k,l} is the two-index Laguerre polynomial

    L_{k,l}(z) = sum_{p=0}^{min(k,l)} sqrt(k!) sqrt(l!) (-1)^p
                 / (p! (k-p)! (l-p)!) * z^{l-p} * conj(z)^{k-p}.

Averaging f_A over heterodyne samples approximates Tr(A rho) within
eta * K_A.  Two independent evaluation paths are provided for the
elementary operators |k><l|: the direct alternating sum above, and a
route through the generalized Laguerre polynomials of scipy — the two
must agree to relative 1e-9 and serve as mutual cross-checks.

All evaluators accept a scalar z or an ndarray of z values.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import eval_genlaguerre

from .errors import ParameterError
from .logmath import LOG2, log_binom

# Alternating-sign cancellation in the explicit sum grows with min(k, l);
# beyond this ceiling double precision is not trustworthy and callers are
# pointed at the generalized-Laguerre path for cross-checks instead.
MAX_LAGUERRE_INDEX = 60


@dataclass(frozen=True)
class EstimatorConfig:
    """Precision eta and cutoff E governing f evaluation.

    eta must lie in (0, 1) (validity range of the defining series) and,
    for E >= 1, below 2/E (precondition of the bias bound).
    """

    eta: float
    cutoff: int

    def __post_init__(self):
        if not isinstance(self.cutoff, (int, np.integer)) or self.cutoff < 0:
            raise ParameterError(f"cutoff must be a non-negative integer, got {self.cutoff}")
        if self.cutoff > MAX_LAGUERRE_INDEX:
            raise ParameterError(
                f"cutoff {self.cutoff} above stability ceiling {MAX_LAGUERRE_INDEX}"
            )
        if not 0.0 < self.eta < 1.0:
            raise ParameterError(f"eta = {self.eta} outside the open interval (0, 1)")
        if self.cutoff >= 1 and not self.eta < 2.0 / self.cutoff:
            raise ParameterError(
                f"eta = {self.eta} not below 2/cutoff = {2.0 / self.cutoff}"
            )


@lru_cache(maxsize=None)
def _l2d_terms(k, l):
    """Coefficient table for L_{k,l}: tuples (c_p, l-p, k-p).

    c_p = (-1)^p sqrt(k!) sqrt(l!) / (p! (k-p)! (l-p)!), via log-gamma.
    """
    terms = []
    half = 0.5 * (math.lgamma(k + 1.0) + math.lgamma(l + 1.0))
    for p in range(min(k, l) + 1):
        log_c = half - (
            math.lgamma(p + 1.0) + math.lgamma(k - p + 1.0) + math.lgamma(l - p + 1.0)
        )
        sign = -1.0 if p % 2 else 1.0
        terms.append((sign * math.exp(log_c), l - p, k - p))
    return tuple(terms)


def _check_indices(k, l):
    if k < 0 or l < 0:
        raise ParameterError(f"negative Laguerre index ({k}, {l})")
    if k > MAX_LAGUERRE_INDEX or l > MAX_LAGUERRE_INDEX:
        raise ParameterError(
            f"Laguerre index ({k}, {l}) above stability ceiling {MAX_LAGUERRE_INDEX}"
        )


def _powers(w, n):
    """[w^0, w^1, ..., w^n] by cumulative multiplication."""
    out = [np.ones_like(w)]
    for _ in range(n):
        out.append(out[-1] * w)
    return out


def _l2d_eval(k, l, w, w_powers=None):
    if w_powers is None:
        w_powers = _powers(w, max(k, l))
    acc = None
    for c, a, b in _l2d_terms(k, l):
        term = c * (w_powers[a] * np.conj(w_powers[b]))
        acc = term if acc is None else acc + term
    return acc


def laguerre2d(k, l, z):
    """L_{k,l}(z) by the explicit alternating sum; k, l <= 60."""
    _check_indices(k, l)
    w = np.asarray(z, dtype=complex)
    value = _l2d_eval(k, l, w)
    return complex(value) if np.isscalar(z) or w.ndim == 0 else value


def _f_elem_core(k, l, zz, u, eta):
    """f_{|k><l|} given precomputed |z|^2 — the streaming hot path."""
    w = zz * (1.0 / math.sqrt(eta))
    lag = _l2d_eval(k, l, w)
    pref = math.exp(-(1.0 + 0.5 * (k + l)) * math.log(eta))
    return (pref * lag) * np.exp((1.0 - 1.0 / eta) * u)


def f_elem(k, l, z, cfg):
    """The estimator of the elementary operator |k><l|:

    f_{|k><l|}(z, eta) = (1/eta)^{1+(k+l)/2} e^{(1-1/eta)|z|^2}
                         L_{k,l}(z / sqrt(eta)).
    """
    _check_indices(k, l)
    if max(k, l) > cfg.cutoff:
        raise ParameterError(
            f"element ({k}, {l}) outside estimator cutoff {cfg.cutoff}"
        )
    zz = np.asarray(z, dtype=complex)
    u = zz.real**2 + zz.imag**2
    value = _f_elem_core(k, l, zz, u, cfg.eta)
    return complex(value) if np.isscalar(z) or zz.ndim == 0 else value


def _is_exactly_hermitian(mat):
    return np.array_equal(mat, mat.conj().T)


def f_op(A, z, cfg):
    """f_A(z, eta) for a general operator A with cutoff <= cfg.cutoff.

    For exactly Hermitian A the double sum is evaluated in conjugate
    pairs, which makes the result real by construction (not merely up to
    rounding) at every magnitude.
    """
    if A.cutoff > cfg.cutoff:
        raise ParameterError(
            f"operator cutoff {A.cutoff} exceeds estimator cutoff {cfg.cutoff}"
        )
    eta = cfg.eta
    mat = A.entries
    dim = A.dim
    zz = np.asarray(z, dtype=complex)
    u = zz.real**2 + zz.imag**2
    w = zz * (1.0 / math.sqrt(eta))
    w_powers = _powers(w, A.cutoff)
    scale = np.array(
        [math.exp(-0.5 * n * math.log(eta)) for n in range(dim)]
    )

    if _is_exactly_hermitian(mat):
        acc = np.zeros(zz.shape, dtype=float)
        for k in range(dim):
            if mat[k, k] != 0.0:
                acc = acc + (mat[k, k].real * scale[k] ** 2) * np.real(
                    _l2d_eval(k, k, w, w_powers)
                )
            for l in range(k + 1, dim):
                if mat[k, l] == 0.0:
                    continue
                coeff = mat[k, l] * (scale[k] * scale[l])
                acc = acc + 2.0 * np.real(coeff * _l2d_eval(k, l, w, w_powers))
        value = acc.astype(complex)
    else:
        value = np.zeros(zz.shape, dtype=complex)
        for k in range(dim):
            for l in range(dim):
                if mat[k, l] == 0.0:
                    continue
                value = value + (mat[k, l] * (scale[k] * scale[l])) * _l2d_eval(
                    k, l, w, w_powers
                )

    value = value * ((1.0 / eta) * np.exp((1.0 - 1.0 / eta) * u))
    return complex(value) if np.isscalar(z) or zz.ndim == 0 else value


def f_pure(psi, z, cfg):
    """f for A = |Psi><Psi|; real by conjugate-pair evaluation.

    The imaginary part of the pairwise sum vanishes identically (each
    (k,l)/(l,k) pair contributes 2 Re(...)), so the Hermiticity residue
    check required of this estimator can never fire; it is retained on
    the general-operator path.
    """
    if psi.cutoff > cfg.cutoff:
        raise ParameterError(
            f"state cutoff {psi.cutoff} exceeds estimator cutoff {cfg.cutoff}"
        )
    eta = cfg.eta
    amps = psi.amplitudes
    zz = np.asarray(z, dtype=complex)
    u = zz.real**2 + zz.imag**2
    w = zz * (1.0 / math.sqrt(eta))
    w_powers = _powers(w, psi.cutoff)
    scale = [math.exp(-0.5 * n * math.log(eta)) for n in range(psi.dim)]

    acc = np.zeros(zz.shape, dtype=float)
    for k in range(psi.dim):
        if amps[k] == 0.0:
            continue
        acc = acc + (abs(amps[k]) ** 2 * scale[k] ** 2) * np.real(
            _l2d_eval(k, k, w, w_powers)
        )
        for l in range(k + 1, psi.dim):
            if amps[l] == 0.0:
                continue
            coeff = amps[k] * np.conj(amps[l]) * (scale[k] * scale[l])
            acc = acc + 2.0 * np.real(coeff * _l2d_eval(k, l, w, w_powers))

    value = acc * ((1.0 / eta) * np.exp((1.0 - 1.0 / eta) * u))
    return float(value) if np.isscalar(z) or zz.ndim == 0 else value


def k_const(A):
    """K_A = sum_{k,l} |A_kl| sqrt((k+1)(l+1))."""
    roots = np.sqrt(np.arange(1, A.dim + 1, dtype=float))
    return float(np.sum(np.abs(A.entries) * np.outer(roots, roots)))


def k_const_pure(psi):
    """K for A = |Psi><Psi|, by the factorization (sum |psi_n| sqrt(n+1))^2."""
    roots = np.sqrt(np.arange(1, psi.dim + 1, dtype=float))
    return float(np.sum(np.abs(psi.amplitudes) * roots) ** 2)


def m_bound(k, l):
    """M_kl = sqrt(2^{|l-k|} C(max(k,l), min(k,l))): the envelope constant
    with |f_{|k><l|}(z, eta)| <= M_kl / eta^{1+(k+l)/2} for all z."""
    if k < 0 or l < 0:
        raise ParameterError(f"negative index ({k}, {l})")
    return math.exp(0.5 * (abs(l - k) * LOG2 + log_binom(max(k, l), min(k, l))))


def _log_c_kl(k, l):
    if k < 0 or l < 0:
        raise ParameterError(f"negative index ({k}, {l})")
    return (
        (1.0 + 0.5 * (k + l)) * math.log((k + 1.0) * (l + 1.0))
        + abs(l - k) * LOG2
        + log_binom(max(k, l), min(k, l))
    )


def c_kl(k, l):
    """C_kl = [(k+1)(l+1)]^{1+(k+l)/2} 2^{|l-k|} C(max(k,l), min(k,l)),
    the per-element constant of the tomography failure bound."""
    return math.exp(_log_c_kl(k, l))


def c_psi(psi, eps, m):
    """C_Psi = sum_{k,l<=E} |psi_k psi_l| (eps/m)^{E-(k+l)/2}
    K_Psi^{1+(k+l)/2} M_kl — the certification Hoeffding constant."""
    if eps <= 0.0:
        raise ParameterError(f"eps must be positive, got {eps}")
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")
    kpsi = k_const_pure(psi)
    ratio = eps / m
    if not ratio < kpsi:
        raise ParameterError(
            f"eps/m = {ratio} not below K_Psi = {kpsi}; "
            f"the estimator precision would leave its validity domain"
        )
    e_cut = psi.cutoff
    mags = np.abs(psi.amplitudes)
    total = 0.0
    for k in range(e_cut + 1):
        if mags[k] == 0.0:
            continue
        for l in range(e_cut + 1):
            if mags[l] == 0.0:
                continue
            half = 0.5 * (k + l)
            total += (
                mags[k]
                * mags[l]
                * ratio ** (e_cut - half)
                * kpsi ** (1.0 + half)
                * m_bound(k, l)
            )
    return total


def f_elem_via_generalized_laguerre(k, l, z, cfg):
    """Second, independent route to f_{|k><l|}.

    Uses the polar-coordinate identity (a = min(k,l), b = max(k,l),
    w = z/sqrt(eta) = r e^{i theta}):

        L_{k,l}(w) = (-1)^a sqrt(a!/b!) r^{b-a} L_a^{(b-a)}(r^2) e^{i(l-k)theta}

    with the generalized Laguerre polynomial evaluated by scipy.  The
    phase is singular at the origin for k != l (the direct path handles
    that removable case), hence the z != 0 precondition there.
    """
    _check_indices(k, l)
    if max(k, l) > cfg.cutoff:
        raise ParameterError(
            f"element ({k}, {l}) outside estimator cutoff {cfg.cutoff}"
        )
    zz = np.asarray(z, dtype=complex)
    if k != l and np.any(zz == 0.0):
        raise ParameterError(
            "z = 0 with k != l: phase undefined; use the direct evaluation"
        )
    eta = cfg.eta
    a, b = min(k, l), max(k, l)
    u = zz.real**2 + zz.imag**2
    r2 = u / eta
    theta = np.arctan2(zz.imag, zz.real)
    sign = -1.0 if a % 2 else 1.0
    amp = (
        sign
        * math.exp(0.5 * (math.lgamma(a + 1.0) - math.lgamma(b + 1.0)))
        * np.power(r2, 0.5 * (b - a))
        * eval_genlaguerre(a, b - a, r2)
    )
    lag = amp * np.exp(1j * (l - k) * theta)
    pref = math.exp(-(1.0 + 0.5 * (k + l)) * math.log(eta))
    value = (pref * lag) * np.exp((1.0 - 1.0 / eta) * u)
    return complex(value) if np.isscalar(z) or zz.ndim == 0 else value
