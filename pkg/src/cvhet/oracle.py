"""Exact heterodyne expectations of the estimator — the sampling-free
ground truth that every Monte-Carlo result in this package is tested
against.

For a state rho with bounded support the expectation of the elementary
estimator has a closed form:

    E_{alpha ~ Q_rho}[ f_{|l><k|}(alpha, eta) ]
        = rho_kl + sum_{s>=1} rho_{k+s,l+s} eta^s
                   sqrt( C(k+s, k) C(l+s, l) )

(the sum truncates at the state's cutoff, so it is exact — no truncation
error by construction).  A two-dimensional quadrature of Q_rho * f_A is
kept as a second, independent numerical route; the two must agree to
1e-6 at default resolution, and a disagreement beyond 1e-4 is raised as
an internal inconsistency rather than returned.
"""

import math

import numpy as np

from .errors import InternalConsistencyError, ParameterError
from .laguerre import f_op
from .logmath import log_binom

QUAD_DEFAULT_RADIUS = 8.0
QUAD_DEFAULT_GRID = 400
QUAD_AGREE_TOL = 1e-4


def expected_f_elem(rho, k, l, cfg):
    """Exact value of E_{Q_rho}[f_{|l><k|}(., eta)] (see module docstring).

    Note the index convention: the expectation of f_{|l><k|} leads with
    rho_kl, matching the tomography estimator of that element.
    """
    if k < 0 or l < 0 or max(k, l) > cfg.cutoff:
        raise ParameterError(
            f"element ({k}, {l}) outside estimator cutoff {cfg.cutoff}"
        )
    if rho.cutoff > cfg.cutoff:
        raise ParameterError(
            f"state cutoff {rho.cutoff} exceeds estimator cutoff {cfg.cutoff}"
        )
    mat = rho.entries
    if k > rho.cutoff or l > rho.cutoff:
        return 0.0 + 0.0j
    total = complex(mat[k, l])
    s = 1
    while k + s <= rho.cutoff and l + s <= rho.cutoff:
        weight = math.exp(
            s * math.log(cfg.eta)
            + 0.5 * (log_binom(k + s, k) + log_binom(l + s, l))
        )
        total += mat[k + s, l + s] * weight
        s += 1
    return total


def expected_f_op(rho, A, cfg):
    """Exact E_{Q_rho}[f_A] = sum_{k,l} A_lk E[f_{|l><k|}] by linearity.

    Satisfies |Tr(A rho) - result| <= eta * K_A (the bias bound) exactly,
    up to arithmetic rounding.
    """
    if A.cutoff > cfg.cutoff:
        raise ParameterError(
            f"operator cutoff {A.cutoff} exceeds estimator cutoff {cfg.cutoff}"
        )
    mat = A.entries
    total = 0.0 + 0.0j
    for k in range(A.dim):
        for l in range(A.dim):
            if mat[l, k] == 0.0:
                continue
            total += mat[l, k] * expected_f_elem(rho, k, l, cfg)
    return total


def _coherent_row_powers(rho_dim, alpha_flat):
    """Matrix C[n, i] = <n|alpha_i> by cumulative recurrence."""
    u = alpha_flat.real**2 + alpha_flat.imag**2
    rows = np.empty((rho_dim, alpha_flat.size), dtype=complex)
    rows[0] = np.exp(-0.5 * u)
    for n in range(1, rho_dim):
        rows[n] = rows[n - 1] * alpha_flat / math.sqrt(n)
    return rows


def quadrature_expect(rho, A, cfg, radius=QUAD_DEFAULT_RADIUS, grid=QUAD_DEFAULT_GRID):
    """Midpoint-rule integration of Q_rho(alpha) f_A(alpha, eta) over the
    square [-radius, radius]^2.

    The integrand is smooth with Gaussian decay, so the midpoint rule is
    spectrally accurate here; radius 8 leaves tail mass far below 1e-12
    for the supported cutoffs.  The result is cross-checked against the
    closed form and a disagreement beyond 1e-4 raises
    InternalConsistencyError (a test-harness failure signal, since one of
    the two oracles must then be wrong).
    """
    if radius < 6.0:
        raise ParameterError(f"radius {radius} below minimum 6")
    if grid < 400:
        raise ParameterError(f"grid {grid} below minimum 400 points per axis")
    h = 2.0 * radius / grid
    axis = -radius + h * (np.arange(grid) + 0.5)
    xs, ys = np.meshgrid(axis, axis, indexing="ij")
    alpha = (xs + 1j * ys).ravel()

    rows = _coherent_row_powers(rho.dim, alpha)
    q_vals = np.einsum("ki,kl,li->i", rows.conj(), rho.entries, rows).real / math.pi
    f_vals = f_op(A, alpha, cfg)
    value = complex(h * h * np.sum(q_vals * f_vals))

    reference = expected_f_op(rho, A, cfg)
    if abs(value - reference) > QUAD_AGREE_TOL:
        raise InternalConsistencyError(
            f"oracle disagreement: quadrature {value} vs closed form "
            f"{reference} (|diff| = {abs(value - reference):.3e} > {QUAD_AGREE_TOL})"
        )
    return value
