"""Truncated-Fock-space linear algebra.

States live in the span of the photon-number basis {|0>, ..., |E>} for a
finite cutoff E.  Everything downstream (estimators, sampling, protocols)
manipulates the three value types defined here:

* ``FockVector``    — unit-norm pure-state amplitudes psi_0..psi_E
* ``FockOperator``  — an arbitrary (E+1)x(E+1) complex matrix
* ``DensityMatrix`` — Hermitian, PSD, trace-one operator

All three are immutable: the backing arrays are copied in and marked
read-only, so values can be shared freely across concurrent tasks.
"""

import math
import warnings

import numpy as np

from .errors import InternalConsistencyError, ParameterError, ValidationError
from .logmath import binom

NORM_TOL = 1e-12          # |sum |psi_n|^2 - 1| tolerance for pure states
HERMITICITY_TOL = 1e-12   # max |rho - rho^dagger| entrywise
TRACE_TOL = 1e-12         # |Tr rho - 1|
PSD_TOL = -1e-10          # minimum eigenvalue floor (floating-point drift)
MAX_OVERLAP_INDEX = 300   # coherent_overlap stability ceiling


class FockVector:
    """A pure state |Psi> = sum_n psi_n |n> on the truncated basis."""

    def __init__(self, amplitudes, cutoff=None):
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1).copy()
        if cutoff is None:
            cutoff = amps.size - 1
        if amps.size != cutoff + 1:
            raise ValidationError(
                f"amplitude length {amps.size} != cutoff+1 = {cutoff + 1}"
            )
        if not np.all(np.isfinite(amps.view(float))):
            raise ValidationError("non-finite amplitude")
        norm_sq = float(np.sum(np.abs(amps) ** 2))
        residual = abs(norm_sq - 1.0)
        if residual > NORM_TOL:
            raise ValidationError(
                f"state not normalized: sum |psi_n|^2 deviates from 1 "
                f"by {residual:.3e} (tolerance {NORM_TOL})"
            )
        amps.flags.writeable = False
        self._amps = amps
        self._cutoff = int(cutoff)

    @property
    def amplitudes(self):
        return self._amps

    @property
    def cutoff(self):
        return self._cutoff

    @property
    def dim(self):
        return self._cutoff + 1

    @classmethod
    def basis(cls, n, cutoff=None):
        """The Fock state |n>, optionally embedded in a larger cutoff."""
        if cutoff is None:
            cutoff = n
        if n > cutoff:
            raise ParameterError(f"basis index {n} exceeds cutoff {cutoff}")
        amps = np.zeros(cutoff + 1, dtype=complex)
        amps[n] = 1.0
        return cls(amps, cutoff)

    def padded(self, cutoff):
        """Zero-pad to a larger cutoff (identity if equal)."""
        if cutoff < self._cutoff:
            raise ParameterError(
                f"cannot pad cutoff {self._cutoff} down to {cutoff}"
            )
        if cutoff == self._cutoff:
            return self
        amps = np.zeros(cutoff + 1, dtype=complex)
        amps[: self.dim] = self._amps
        return FockVector(amps, cutoff)

    def __repr__(self):
        return f"FockVector(cutoff={self._cutoff})"


class FockOperator:
    """A general operator A on the truncated basis; no structure assumed."""

    def __init__(self, entries, cutoff=None):
        mat = np.asarray(entries, dtype=complex).copy()
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValidationError(f"operator matrix not square: shape {mat.shape}")
        if cutoff is None:
            cutoff = mat.shape[0] - 1
        if mat.shape[0] != cutoff + 1:
            raise ValidationError(
                f"matrix dimension {mat.shape[0]} != cutoff+1 = {cutoff + 1}"
            )
        if not np.all(np.isfinite(mat.view(float))):
            raise ValidationError("non-finite operator entry")
        mat.flags.writeable = False
        self._mat = mat
        self._cutoff = int(cutoff)

    @property
    def entries(self):
        return self._mat

    @property
    def cutoff(self):
        return self._cutoff

    @property
    def dim(self):
        return self._cutoff + 1

    @classmethod
    def elementary(cls, k, l, cutoff=None):
        """|k><l| embedded at the given cutoff (default max(k, l))."""
        if cutoff is None:
            cutoff = max(k, l)
        mat = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
        mat[k, l] = 1.0
        return cls(mat, cutoff)

    def __repr__(self):
        return f"{type(self).__name__}(cutoff={self._cutoff})"


class DensityMatrix(FockOperator):
    """A density operator: Hermitian, PSD, unit trace (with tolerances)."""

    def __init__(self, entries, cutoff=None):
        super().__init__(entries, cutoff)
        mat = self._mat
        herm_residual = float(np.max(np.abs(mat - mat.conj().T)))
        if herm_residual > HERMITICITY_TOL:
            raise ValidationError(
                f"not Hermitian: max |rho - rho^dagger| = {herm_residual:.3e} "
                f"(tolerance {HERMITICITY_TOL})"
            )
        trace_residual = abs(float(np.trace(mat).real) - 1.0)
        if trace_residual > TRACE_TOL:
            raise ValidationError(
                f"trace deviates from 1 by {trace_residual:.3e} "
                f"(tolerance {TRACE_TOL})"
            )
        min_eig = float(np.linalg.eigvalsh(mat)[0])
        if min_eig < PSD_TOL:
            raise ValidationError(
                f"not PSD: minimum eigenvalue {min_eig:.3e} "
                f"below floor {PSD_TOL}"
            )

    @classmethod
    def from_pure(cls, psi):
        """|Psi><Psi| for a FockVector Psi."""
        amps = psi.amplitudes
        return cls(np.outer(amps, amps.conj()), psi.cutoff)


def fidelity_pure(psi, rho, coerce=False):
    """<Psi|rho|Psi> for a pure target and a (possibly mixed) state.

    Cutoff mismatches are an error unless ``coerce`` is set, in which case
    rho is zero-padded or truncated to psi's cutoff (with a warning) —
    silent coercion hides modeling errors.
    """
    mat = rho.entries
    if rho.cutoff != psi.cutoff:
        if not coerce:
            raise ParameterError(
                f"cutoff mismatch: psi has {psi.cutoff}, rho has {rho.cutoff} "
                f"(pass coerce=True to zero-pad/truncate rho)"
            )
        warnings.warn(
            f"coercing rho from cutoff {rho.cutoff} to {psi.cutoff}",
            stacklevel=2,
        )
        d = psi.dim
        coerced = np.zeros((d, d), dtype=complex)
        s = min(d, rho.dim)
        coerced[:s, :s] = mat[:s, :s]
        mat = coerced
    v = psi.amplitudes
    raw = np.vdot(v, mat @ v)
    # conjugate-symmetric evaluation: (x + conj(x))/2 kills the imaginary
    # residue exactly for Hermitian rho
    value = float(raw.real)
    if abs(raw.imag) > 1e-12 * max(1.0, abs(value)):
        raise InternalConsistencyError(
            f"fidelity imaginary residue {raw.imag:.3e} on Hermitian input"
        )
    return min(1.0, max(0.0, value))


def trace_distance(rho1, rho2):
    """(1/2) sum |eigenvalues(rho1 - rho2)|."""
    if rho1.cutoff != rho2.cutoff:
        raise ParameterError(
            f"cutoff mismatch: {rho1.cutoff} vs {rho2.cutoff}"
        )
    diff = rho1.entries - rho2.entries
    residual = float(np.max(np.abs(diff - diff.conj().T)))
    if residual > 10 * HERMITICITY_TOL:
        raise InternalConsistencyError(
            f"difference of density matrices not Hermitian: residual {residual:.3e}"
        )
    eigs = np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))
    return float(0.5 * np.sum(np.abs(eigs)))


def coherent_overlap(alpha, n):
    """<n|alpha> = e^{-|alpha|^2/2} alpha^n / sqrt(n!).

    Evaluated in log space so that indices up to n = 300 stay finite.
    """
    if n < 0 or n > MAX_OVERLAP_INDEX:
        raise ParameterError(
            f"index {n} outside [0, {MAX_OVERLAP_INDEX}]"
        )
    alpha = complex(alpha)
    r = abs(alpha)
    if r == 0.0:
        return 1.0 + 0.0j if n == 0 else 0.0 + 0.0j
    log_mag = n * math.log(r) - 0.5 * math.lgamma(n + 1.0) - 0.5 * r * r
    phase = n * math.atan2(alpha.imag, alpha.real)
    return math.exp(log_mag) * complex(math.cos(phase), math.sin(phase))


def apply_loss(rho, tau):
    """Pure-loss channel with transmissivity tau on the truncated basis.

    Kraus operators K_j |n> = sqrt(C(n,j) tau^{n-j} (1-tau)^j) |n-j| for
    j = 0..E; exactly trace preserving on bounded support.  The output is
    renormalized to absorb floating-point drift.
    """
    if not 0.0 <= tau <= 1.0:
        raise ParameterError(f"transmissivity {tau} outside [0, 1]")
    d = rho.dim
    out = np.zeros((d, d), dtype=complex)
    for j in range(d):
        kraus = np.zeros((d, d))
        for n in range(j, d):
            kraus[n - j, n] = math.sqrt(
                binom(n, j) * tau ** (n - j) * (1.0 - tau) ** j
            )
        out += kraus @ rho.entries @ kraus.T
    out /= np.trace(out).real
    return DensityMatrix(0.5 * (out + out.conj().T), rho.cutoff)


def spectral_decompose(rho, weight_floor=1e-12):
    """Eigendecomposition of rho as [(weight, FockVector), ...].

    Weights below ``weight_floor`` are dropped and the remaining mass is
    renormalized; reconstruction sum_j w_j |v_j><v_j| matches rho entrywise
    to 1e-10.
    """
    eigvals, eigvecs = np.linalg.eigh(rho.entries)
    pairs = []
    for idx in range(eigvals.size - 1, -1, -1):  # descending weight
        w = float(eigvals[idx])
        if w < weight_floor:
            continue
        vec = eigvecs[:, idx]
        vec = vec / np.linalg.norm(vec)
        pairs.append((w, FockVector(vec, rho.cutoff)))
    total = sum(w for w, _ in pairs)
    if total <= 0.0:
        raise InternalConsistencyError("density matrix has no positive spectrum")
    return [(w / total, v) for w, v in pairs]
