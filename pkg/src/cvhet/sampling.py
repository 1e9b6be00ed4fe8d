"""Husimi-Q evaluation and heterodyne sample generation.

Heterodyne detection of a state rho is classically simulated by drawing
from its Husimi Q function  Q_rho(alpha) = <alpha|rho|alpha> / pi.

Sampling algorithm (exact, no grid bias):

1. spectral-decompose rho into pure components v_j with weights p_j;
2. propose from the Fock mixture  sum_{j,n} p_j |v_jn|^2 Q_{|n>}, where a
   Q_{|n>} draw is (radius^2 ~ Gamma(n+1, 1), uniform phase);
3. accept a proposal for component j with probability

       |sum_n v_jn conj(alpha)^n / sqrt(n!)|^2
       -----------------------------------------      (exp factors cancel)
       (E+1) sum_n |v_jn|^2 |alpha|^{2n} / n!

   which is bounded by 1 via Cauchy-Schwarz; every component accepts at
   rate exactly 1/(E+1), so the accepted stream is distributed as Q_rho.

Determinism contract: the sample stream is a pure function of
(state, count, seed, chunk size) — never of thread count or scheduling.
Proposals are drawn in fixed-size chunks; chunk i uses its own generator
seeded by SeedSequence(seed, spawn_key=(purpose..., i)), and chunks are
assembled in index order.  Within a chunk the draw order is: atom
selector, radial draws grouped by photon number (ascending), direction
normals (x then y), acceptance uniforms.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Sequence, Union

import numpy as np

from .errors import InternalConsistencyError, ParameterError
from .fock import DensityMatrix, FockVector, coherent_overlap, spectral_decompose

DEFAULT_CHUNK = 1 << 20
_MAX_PROPOSALS_PER_SAMPLE = 1_000_000

# spawn-key purposes (first element of every spawn key)
_KEY_SAMPLE = 0   # sample_q chunk streams
_KEY_MIX = 1      # mixture-component draw (one per protocol run)
_KEY_BAD = 2      # SubsetSwap bad-position selection
_KEY_PERM = 3     # protocol permutation
_KEY_STATE = 4    # per-state chunk streams inside run_protocol_sampling


def q_eval(rho, alpha):
    """Q_rho(alpha) = (1/pi) <alpha|rho|alpha>, clamped to >= 0."""
    overlaps = np.array(
        [coherent_overlap(alpha, n) for n in range(rho.dim)], dtype=complex
    )
    value = float(np.real(np.vdot(overlaps, rho.entries @ overlaps))) / math.pi
    return max(0.0, value)


def support_count(samples, threshold):
    """Number of samples with |alpha|^2 strictly greater than threshold."""
    z = np.asarray(samples, dtype=complex)
    if z.size == 0:
        return 0
    return int(np.count_nonzero(z.real**2 + z.imag**2 > threshold))


class _SamplerPlan:
    """Precomputed tables for the rejection kernel of one density matrix."""

    def __init__(self, rho):
        components = spectral_decompose(rho)
        env_rank = rho.cutoff + 1  # shared envelope factor E+1 for every
        # component, so all components accept at the same rate and the
        # accepted mixture keeps the spectral weights exactly

        atom_w, atom_n, atom_j = [], [], []
        num_coeffs, den_coeffs = [], []
        inv_sqrt_fact = np.array(
            [math.exp(-0.5 * math.lgamma(n + 1.0)) for n in range(env_rank)]
        )
        for j, (weight, vec) in enumerate(components):
            amps = np.array(vec.amplitudes, dtype=complex)
            # gauge: rotate the global phase so the largest entry is real
            # positive — Q is phase invariant but this keeps the stream
            # independent of eigensolver phase conventions
            pivot = amps[int(np.argmax(np.abs(amps)))]
            if pivot != 0.0:
                amps = amps * (pivot.conjugate() / abs(pivot))
            mags = np.abs(amps) ** 2
            for n in range(env_rank):
                if mags[n] > 0.0:
                    atom_w.append(weight * mags[n])
                    atom_n.append(n)
                    atom_j.append(j)
            num_coeffs.append(amps * inv_sqrt_fact)
            den_coeffs.append(env_rank * mags * inv_sqrt_fact**2)

        order = np.lexsort((atom_n, atom_j))
        self.atom_cum = np.cumsum(np.asarray(atom_w)[order])
        self.atom_n = np.asarray(atom_n, dtype=np.int64)[order]
        self.atom_j = np.asarray(atom_j, dtype=np.int64)[order]
        self.present_ns = sorted(set(self.atom_n.tolist()))
        self.n_atoms = self.atom_n.size
        self.n_comp = len(components)
        self.num_coeffs = num_coeffs
        self.den_coeffs = den_coeffs


def _horner_complex(coeffs, x):
    acc = np.full(x.shape, coeffs[-1], dtype=complex)
    for c in coeffs[-2::-1]:
        acc *= x
        acc += c
    return acc


def _horner_real(coeffs, x):
    acc = np.full(x.shape, coeffs[-1], dtype=float)
    for c in coeffs[-2::-1]:
        acc *= x
        acc += c
    return acc


def _draw_chunk(rng, plan, size):
    """One fixed-size block of proposals; returns the accepted samples."""
    # which (component, photon-number) atom each proposal comes from
    if plan.n_atoms == 1:
        ns = None
        js = None
    else:
        uc = rng.random(size)
        if plan.n_atoms == 2:
            ai = (uc >= plan.atom_cum[0]).astype(np.int64)
        else:
            ai = np.minimum(
                np.searchsorted(plan.atom_cum, uc, side="right"),
                plan.n_atoms - 1,
            )
        ns = plan.atom_n[ai]
        js = plan.atom_j[ai] if plan.n_comp > 1 else None

    # radial part: |alpha|^2 ~ Gamma(n+1, 1), grouped by photon number
    if plan.n_atoms == 1:
        n0 = int(plan.atom_n[0])
        u = (
            rng.standard_exponential(size)
            if n0 == 0
            else rng.standard_gamma(n0 + 1.0, size)
        )
    else:
        u = np.empty(size)
        for n in plan.present_ns:
            sel = np.nonzero(ns == n)[0]
            if sel.size == 0:
                continue
            u[sel] = (
                rng.standard_exponential(sel.size)
                if n == 0
                else rng.standard_gamma(n + 1.0, sel.size)
            )

    # direction: normalized Gaussian pair (exactly uniform on the circle)
    x = rng.standard_normal(size)
    y = rng.standard_normal(size)
    nrm = np.sqrt(x * x + y * y)
    np.maximum(nrm, 1e-300, out=nrm)
    cos_t = x / nrm
    sin_t = y / nrm

    r = np.sqrt(u)
    abar = np.empty(size, dtype=complex)  # conj(alpha) = r e^{-i theta}
    abar.real = r * cos_t
    abar.imag = r * (-sin_t)

    if plan.n_comp == 1:
        poly = _horner_complex(plan.num_coeffs[0], abar)
        num = poly.real**2 + poly.imag**2
        den = _horner_real(plan.den_coeffs[0], u)
    else:
        num = np.empty(size)
        den = np.empty(size)
        for j in range(plan.n_comp):
            sel = np.nonzero(js == j)[0]
            if sel.size == 0:
                continue
            poly = _horner_complex(plan.num_coeffs[j], abar[sel])
            num[sel] = poly.real**2 + poly.imag**2
            den[sel] = _horner_real(plan.den_coeffs[j], u[sel])

    accept = rng.random(size) * den < num
    return np.conj(abar[accept])


def _chunk_stream(plan, count, seed, key_prefix, chunk_size, workers):
    """Yield accepted-sample blocks totalling exactly `count`."""
    if count == 0:
        return
    accepted = 0
    proposals = 0

    def make_chunk(index):
        ss = np.random.SeedSequence(seed, spawn_key=key_prefix + (index,))
        return _draw_chunk(np.random.default_rng(ss), plan, chunk_size)

    def guard():
        if proposals > _MAX_PROPOSALS_PER_SAMPLE * (accepted + 1):
            raise InternalConsistencyError(
                f"rejection sampler accepted {accepted} of {proposals} "
                f"proposals; envelope bug suspected"
            )

    if workers <= 1:
        index = 0
        while accepted < count:
            block = make_chunk(index)
            index += 1
            proposals += chunk_size
            if accepted + block.size > count:
                block = block[: count - accepted]
            accepted += block.size
            guard()
            if block.size:
                yield block
    else:
        # chunks are independent; parallel execution changes only wall
        # time, never the stream (blocks are consumed in index order)
        pool = ThreadPoolExecutor(max_workers=workers)
        try:
            pending = []
            next_index = 0
            while accepted < count:
                while len(pending) < workers:
                    pending.append(pool.submit(make_chunk, next_index))
                    next_index += 1
                block = pending.pop(0).result()
                proposals += chunk_size
                if accepted + block.size > count:
                    block = block[: count - accepted]
                accepted += block.size
                guard()
                if block.size:
                    yield block
        finally:
            pool.shutdown(wait=False, cancel_futures=True)


def _as_density(state):
    if isinstance(state, DensityMatrix):
        return state
    if isinstance(state, FockVector):
        return DensityMatrix.from_pure(state)
    raise ParameterError(f"expected FockVector or DensityMatrix, got {type(state)!r}")


def _check_seed(seed):
    if not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ParameterError(f"seed must be a non-negative integer, got {seed!r}")
    return int(seed)


def iter_sample_chunks(rho, count, seed, chunk_size=DEFAULT_CHUNK, workers=1):
    """Stream `count` heterodyne samples of rho in blocks.

    Identical stream to sample_q for the same arguments; intended for
    consumers that fold over samples too numerous to materialize.
    """
    if count < 0:
        raise ParameterError(f"count must be >= 0, got {count}")
    plan = _SamplerPlan(_as_density(rho))
    return _chunk_stream(
        plan, count, _check_seed(seed), (_KEY_SAMPLE,), chunk_size, workers
    )


def sample_q(rho, count, seed, chunk_size=DEFAULT_CHUNK, workers=1):
    """`count` i.i.d. samples from Q_rho as a complex array.

    Deterministic for fixed (rho, count, seed, chunk_size) regardless of
    `workers`.
    """
    blocks = list(iter_sample_chunks(rho, count, seed, chunk_size, workers))
    if not blocks:
        return np.empty(0, dtype=complex)
    return np.concatenate(blocks)


# ---------------------------------------------------------------------------
# adversary models and protocol sampling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HonestIID:
    """Every copy is the target pure state."""

    psi: FockVector


@dataclass(frozen=True)
class NoisyIID:
    """Every copy is the same (possibly mixed) state."""

    rho: DensityMatrix


@dataclass(frozen=True)
class MixtureIID:
    """A permutation-invariant prover: one component is drawn per run and
    all copies carry it (a mixture of i.i.d. behaviours)."""

    weights: Sequence[float]
    states: Sequence[DensityMatrix]

    def __post_init__(self):
        if len(self.weights) != len(self.states) or not self.states:
            raise ParameterError("weights and states must be equal-length, non-empty")
        total = float(np.sum(np.asarray(self.weights, dtype=float)))
        if abs(total - 1.0) > 1e-12:
            raise ParameterError(
                f"mixture weights sum to {total}, deviating from 1 by "
                f"{abs(total - 1.0):.3e} (tolerance 1e-12)"
            )
        if np.any(np.asarray(self.weights, dtype=float) < 0.0):
            raise ParameterError("negative mixture weight")


@dataclass(frozen=True)
class SubsetSwap:
    """A per-position product cheater: a seeded random subset of positions
    carries `bad`, the rest `good`.  Not permutation invariant — used for
    negative tests of the verification protocol."""

    good: DensityMatrix
    bad: DensityMatrix
    bad_fraction: float

    def __post_init__(self):
        if not 0.0 <= self.bad_fraction <= 1.0:
            raise ParameterError(
                f"bad_fraction {self.bad_fraction} outside [0, 1]"
            )


AdversaryModel = Union[HonestIID, NoisyIID, MixtureIID, SubsetSwap]


@dataclass(frozen=True)
class ProtocolSamples:
    """Measurement record of one protocol run.

    kept_descriptor lists the exact state object left unmeasured at each
    kept position — simulation ground truth, for acceptance testing only.
    """

    support_samples: np.ndarray
    estimate_samples: np.ndarray
    kept_descriptor: List
    rng_seed: int


def _resolve_adversary(adv, total, seed):
    """-> (states for sampling, per-position assignment, descriptor objects)."""
    if isinstance(adv, HonestIID):
        return [_as_density(adv.psi)], np.zeros(total, dtype=np.int64), [adv.psi]
    if isinstance(adv, NoisyIID):
        return [adv.rho], np.zeros(total, dtype=np.int64), [adv.rho]
    if isinstance(adv, MixtureIID):
        rng = np.random.default_rng(
            np.random.SeedSequence(seed, spawn_key=(_KEY_MIX,))
        )
        weights = np.asarray(adv.weights, dtype=float)
        component = int(rng.choice(weights.size, p=weights / weights.sum()))
        state = adv.states[component]
        return [state], np.zeros(total, dtype=np.int64), [state]
    if isinstance(adv, SubsetSwap):
        n_bad = int(round(adv.bad_fraction * total))
        assignment = np.zeros(total, dtype=np.int64)
        if n_bad > 0:
            rng = np.random.default_rng(
                np.random.SeedSequence(seed, spawn_key=(_KEY_BAD,))
            )
            bad_positions = rng.choice(total, size=n_bad, replace=False)
            assignment[bad_positions] = 1
        return [adv.good, adv.bad], assignment, [adv.good, adv.bad]
    raise ParameterError(f"unknown adversary model {type(adv)!r}")


def run_protocol_sampling(adv, n, k, q, m, seed, chunk_size=DEFAULT_CHUNK):
    """Simulate one protocol run under an adversary model.

    Verification mode (k >= 1): n + k subsystems are prepared; a seeded
    uniform permutation assigns k to the support test, discards 4q,
    leaves m unmeasured, and measures the remaining n - 4q - m for the
    estimate.  Requires q >= m and n - 4q - m >= 1.

    Certification mode (k == 0, q == 0): n + m subsystems; all n are
    measured for the estimate (the support test runs on those same
    samples downstream) and m are kept.
    """
    seed = _check_seed(seed)
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if k == 0:
        if q != 0:
            raise ParameterError("certification mode (k = 0) requires q = 0")
        n_estimate = n
        total = n + m
    else:
        if q < m:
            raise ParameterError(f"q = {q} below m = {m}")
        n_estimate = n - 4 * q - m
        if n_estimate < 1:
            raise ParameterError(
                f"n - 4q - m = {n_estimate} leaves no estimate samples"
            )
        total = n + k

    states, assignment, descriptors = _resolve_adversary(adv, total, seed)

    perm_rng = np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(_KEY_PERM,))
    )
    perm = perm_rng.permutation(total)
    support_pos = perm[:k]
    kept_pos = perm[k + 4 * q : k + 4 * q + m]
    estimate_pos = perm[k + 4 * q + m :]
    assert estimate_pos.size == n_estimate

    support = np.empty(k, dtype=complex)
    estimate = np.empty(n_estimate, dtype=complex)
    sup_ids = assignment[support_pos]
    est_ids = assignment[estimate_pos]
    for sid, state in enumerate(states):
        sup_sel = np.nonzero(sup_ids == sid)[0]
        est_sel = np.nonzero(est_ids == sid)[0]
        needed = sup_sel.size + est_sel.size
        if needed == 0:
            continue
        plan = _SamplerPlan(state)
        blocks = list(
            _chunk_stream(
                plan, needed, seed, (_KEY_STATE, sid), chunk_size, workers=1
            )
        )
        draws = np.concatenate(blocks)
        support[sup_sel] = draws[: sup_sel.size]
        estimate[est_sel] = draws[sup_sel.size :]

    kept = [descriptors[assignment[p]] for p in kept_pos]
    return ProtocolSamples(
        support_samples=support,
        estimate_samples=estimate,
        kept_descriptor=kept,
        rng_seed=seed,
    )
