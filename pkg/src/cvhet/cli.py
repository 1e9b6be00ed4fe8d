"""Command-line surface and file formats.

Commands: sample, tomography, certify, verify, plan, oracle.  Reports
are JSON text maps that echo every input (paths, parameters, seed) so a
published number is reproducible from the report alone; probabilities
appear both as natural-log values and clamped to [0, 1].  Sample files
hold one sample per line as "re im" at 17 significant digits, which
round-trips float64 losslessly.

Exit codes: 0 success; 1 parameter/parse/validation error; 2 internal
inconsistency (an invariant the package owes itself was violated).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .certify import (
    CertificationParams,
    VerificationParams,
    certify,
    verify,
)
from .errors import InternalConsistencyError, ParameterError, ParseError
from .fock import DensityMatrix, FockOperator, FockVector
from .laguerre import EstimatorConfig, k_const
from .oracle import expected_f_op, quadrature_expect
from .sampling import HonestIID, NoisyIID, run_protocol_sampling, sample_q
from .tomography import required_samples_tomography, tomography_run


@dataclass(frozen=True)
class RunConfig:
    """One CLI invocation: a command, its file paths, and its parameters."""

    command: str
    state_path: Optional[str]
    target_path: Optional[str]
    params: dict
    seed: int
    output_path: Optional[str]


# ---------------------------------------------------------------------------
# state and operator specs
# ---------------------------------------------------------------------------


def _parse_pair(value, where):
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value)
    ):
        raise ParseError(f"field {where}: expected a [re, im] pair, got {value!r}")
    return complex(value[0], value[1])


def _load_json_map(text):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(obj, dict):
        raise ParseError("top level must be a JSON map")
    return obj


def _parse_cutoff(obj):
    cutoff = obj.get("cutoff")
    if not isinstance(cutoff, int) or isinstance(cutoff, bool) or cutoff < 0:
        raise ParseError(f"field cutoff: expected a non-negative integer, got {cutoff!r}")
    return cutoff


def parse_state_spec(text):
    """JSON map with "cutoff" and exactly one of "amplitudes" (pure state)
    or "matrix" (density matrix); complex numbers as [re, im] pairs.

    Returns a validated FockVector or DensityMatrix; malformed text is a
    ParseError naming the offending field, physics-invariant violations
    propagate as ValidationError with the measured residual.
    """
    obj = _load_json_map(text)
    cutoff = _parse_cutoff(obj)
    has_amp = "amplitudes" in obj
    has_mat = "matrix" in obj
    if has_amp == has_mat:
        raise ParseError('exactly one of "amplitudes" or "matrix" is required')
    dim = cutoff + 1

    if has_amp:
        raw = obj["amplitudes"]
        if not isinstance(raw, list) or len(raw) != dim:
            raise ParseError(
                f"field amplitudes: expected {dim} entries for cutoff {cutoff}"
            )
        amps = np.array(
            [_parse_pair(v, f"amplitudes[{i}]") for i, v in enumerate(raw)]
        )
        return FockVector(amps)

    raw = obj["matrix"]
    if not isinstance(raw, list) or len(raw) != dim:
        raise ParseError(f"field matrix: expected {dim} rows for cutoff {cutoff}")
    rows = []
    for i, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != dim:
            raise ParseError(f"field matrix[{i}]: expected {dim} entries")
        rows.append([_parse_pair(v, f"matrix[{i}][{j}]") for j, v in enumerate(row)])
    return DensityMatrix(np.array(rows, dtype=complex))


def parse_operator_spec(text):
    """Like parse_state_spec but for a general operator: "matrix" only,
    no trace/positivity requirements."""
    obj = _load_json_map(text)
    cutoff = _parse_cutoff(obj)
    if "matrix" not in obj:
        raise ParseError('field "matrix" is required for an operator spec')
    dim = cutoff + 1
    raw = obj["matrix"]
    if not isinstance(raw, list) or len(raw) != dim:
        raise ParseError(f"field matrix: expected {dim} rows for cutoff {cutoff}")
    rows = []
    for i, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != dim:
            raise ParseError(f"field matrix[{i}]: expected {dim} entries")
        rows.append([_parse_pair(v, f"matrix[{i}][{j}]") for j, v in enumerate(row)])
    return FockOperator(np.array(rows, dtype=complex))


def _read_state(path, pure_only=False):
    with open(path, "r", encoding="utf-8") as fh:
        state = parse_state_spec(fh.read())
    if pure_only and not isinstance(state, FockVector):
        raise ParameterError(f"{path}: a pure-state (amplitudes) spec is required here")
    return state


# ---------------------------------------------------------------------------
# sample files
# ---------------------------------------------------------------------------


def write_samples(path, samples):
    """One sample per line, "re im", 17 significant digits."""
    z = np.asarray(samples, dtype=complex)
    cols = np.column_stack([z.real, z.imag]) if z.size else np.empty((0, 2))
    np.savetxt(path, cols, fmt="%.17g")


def read_samples(path):
    """Inverse of write_samples; malformed lines fail with their number."""
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            parts = stripped.split()
            if len(parts) != 2:
                raise ParseError(
                    f"{path}:{lineno}: expected two fields 're im', got {len(parts)}"
                )
            try:
                values.append(complex(float(parts[0]), float(parts[1])))
            except ValueError:
                raise ParseError(
                    f"{path}:{lineno}: non-numeric field in {stripped!r}"
                ) from None
    return np.array(values, dtype=complex)


# ---------------------------------------------------------------------------
# report plumbing
# ---------------------------------------------------------------------------


def _cnum(z):
    return [float(np.real(z)), float(np.imag(z))]


def _cmat(mat):
    return [[_cnum(v) for v in row] for row in np.asarray(mat)]


def _budget_json(budget):
    return {
        "terms_log": {k: float(v) for k, v in budget.terms.items()},
        "terms_clamped": budget.clamped_terms(),
        "vacuous": list(budget.vacuous),
        "total_log": budget.total_log,
        "total_clamped": budget.total_clamped,
    }


def _emit(report, output_path):
    text = json.dumps(report, indent=2)
    if output_path:
        with open(output_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _cmd_sample(config):
    p = config.params
    if config.output_path is None:
        raise ParameterError("sample: --out is required (the sample file path)")
    try:
        count = int(p["samples"])
    except (TypeError, ValueError):
        raise ParameterError(
            f"sample: --samples must be a count, got {p['samples']!r}"
        ) from None
    state = _read_state(config.state_path)
    z = sample_q(state, count, config.seed, workers=p["workers"])
    write_samples(config.output_path, z)
    return {
        "command": "sample",
        "state": config.state_path,
        "count": count,
        "seed": config.seed,
        "workers": p["workers"],
        "samples_file": config.output_path,
    }


def _cmd_tomography(config):
    p = config.params
    samples = read_samples(p["samples"])
    report = tomography_run(
        samples, p["cutoff"], p["eps"], p["eps_prime"], hermitize=p["hermitize"]
    )
    out = {
        "command": "tomography",
        "samples_file": p["samples"],
        "sample_count": report.sample_count,
        "cutoff": report.cutoff,
        "epsilon": report.epsilon,
        "epsilon_prime": report.epsilon_prime,
        "hermitize": bool(p["hermitize"]),
        "estimates": _cmat(report.estimates),
        "confidence_radius": report.confidence_radius,
        "failure_log_prob": report.failure_log_prob,
        "failure_prob": report.failure_prob,
    }
    if p["convergence"]:
        if config.output_path is None:
            raise ParameterError("tomography: --convergence requires --out")
        out["convergence_file"] = _write_convergence(
            config.output_path + ".convergence",
            samples,
            p["cutoff"],
            p["eps"],
            p["eps_prime"],
        )
    return out


def _write_convergence(path, samples, cutoff, eps, eps_prime):
    """Estimate-vs-sample-count table: plain text, one row per prefix
    count, columns are re/im of every element (row-major)."""
    n = len(samples)
    counts = sorted({max(1, int(round(n / 2.0**j))) for j in range(11)})
    header_cells = ["count"]
    for k in range(cutoff + 1):
        for l in range(cutoff + 1):
            header_cells += [f"re_{k}{l}", f"im_{k}{l}"]
    lines = ["# " + " ".join(header_cells)]
    for c in counts:
        rep = tomography_run(samples[:c], cutoff, eps, eps_prime)
        cells = [str(c)]
        for k in range(cutoff + 1):
            for l in range(cutoff + 1):
                cells += [
                    "%.17g" % rep.estimates[k, l].real,
                    "%.17g" % rep.estimates[k, l].imag,
                ]
        lines.append(" ".join(cells))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def _cmd_certify(config):
    p = config.params
    psi = _read_state(config.target_path, pure_only=True)
    samples = read_samples(p["samples"])
    n = p["n"] if p["n"] is not None else len(samples)
    params = CertificationParams(
        n=n, m=p["m"], s=p["s"], E=p["cutoff"], eps=p["eps"], eps_prime=p["eps_prime"]
    )
    rep = certify(samples, psi, params)
    return {
        "command": "certify",
        "target": config.target_path,
        "samples_file": p["samples"],
        "params": {
            "n": params.n,
            "m": params.m,
            "s": params.s,
            "E": params.E,
            "eps": params.eps,
            "eps_prime": params.eps_prime,
        },
        "support_exceedances": rep.r,
        "passed": rep.passed,
        "estimate": rep.estimate,
        "radius": rep.radius,
        "budget": _budget_json(rep.budget),
    }


def _cmd_verify(config):
    p = config.params
    psi = _read_state(config.target_path, pure_only=True)
    if config.state_path is not None:
        prepared = _read_state(config.state_path)
        if isinstance(prepared, FockVector):
            prepared = DensityMatrix.from_pure(prepared)
        adversary = NoisyIID(prepared)
    else:
        adversary = HonestIID(psi)
    params = VerificationParams(
        n=p["n"], k=p["k"], q=p["q"], m=p["m"], s=p["s"],
        E=p["cutoff"], eps=p["eps"], eps_prime=p["eps_prime"],
    )
    params.validate_for(psi)
    run_samples = run_protocol_sampling(
        adversary, params.n, params.k, params.q, params.m, config.seed
    )
    rep = verify(run_samples, psi, params)
    return {
        "command": "verify",
        "target": config.target_path,
        "prepared_state": config.state_path,
        "seed": config.seed,
        "params": {
            "n": params.n, "k": params.k, "q": params.q, "m": params.m,
            "s": params.s, "E": params.E,
            "eps": params.eps, "eps_prime": params.eps_prime,
        },
        "support_exceedances": rep.r,
        "passed": rep.passed,
        "estimate": rep.estimate,
        "radius": rep.radius,
        "kept_count": params.m,
        "budget": _budget_json(rep.budget),
    }


def _cmd_plan(config):
    p = config.params
    n = required_samples_tomography(p["cutoff"], p["eps"], p["eps_prime"], p["delta"])
    return {
        "command": "plan",
        "cutoff": p["cutoff"],
        "eps": p["eps"],
        "eps_prime": p["eps_prime"],
        "delta": p["delta"],
        "required_samples": n,
    }


def _cmd_oracle(config):
    p = config.params
    state = _read_state(config.state_path)
    if isinstance(state, FockVector):
        state = DensityMatrix.from_pure(state)
    with open(p["operator"], "r", encoding="utf-8") as fh:
        op = parse_operator_spec(fh.read())
    cfg = EstimatorConfig(p["eta"], max(state.cutoff, op.cutoff))
    value = expected_f_op(state, op, cfg)
    k_a = k_const(op)
    dim = max(state.dim, op.dim)
    a_pad = np.zeros((dim, dim), dtype=complex)
    a_pad[: op.dim, : op.dim] = op.entries
    r_pad = np.zeros((dim, dim), dtype=complex)
    r_pad[: state.dim, : state.dim] = state.entries
    out = {
        "command": "oracle",
        "state": config.state_path,
        "operator": p["operator"],
        "eta": p["eta"],
        "expected_f_op": _cnum(value),
        "k_const": k_a,
        "bias_bound": p["eta"] * k_a,
        "trace_target": _cnum(np.trace(a_pad @ r_pad)),
    }
    if p["quadrature"]:
        out["quadrature"] = _cnum(quadrature_expect(state, op, cfg))
    return out


_COMMANDS = {
    "sample": _cmd_sample,
    "tomography": _cmd_tomography,
    "certify": _cmd_certify,
    "verify": _cmd_verify,
    "plan": _cmd_plan,
    "oracle": _cmd_oracle,
}


def run(config: RunConfig) -> dict:
    """Dispatch one configured command; returns the report it emitted."""
    started = time.perf_counter()
    report = _COMMANDS[config.command](config)
    report["wall_clock_seconds"] = time.perf_counter() - started
    if config.command == "sample":
        # the samples file is the artifact; the report goes to stdout
        print(f"wrote {report['samples_file']}")
    else:
        _emit(report, config.output_path)
    return report


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="cvhet",
        description="Heterodyne tomography, certification, and verification "
        "of continuous-variable states in classical simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, seed=True, out=True):
        if seed:
            sp.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
        if out:
            sp.add_argument("--out", default=None, help="output path")

    sp = sub.add_parser("sample", help="draw heterodyne samples of a state")
    sp.add_argument("--state", required=True, help="state spec (JSON)")
    sp.add_argument("--samples", required=True, help="number of samples to draw")
    sp.add_argument("--workers", type=int, default=1, help="sampling threads")
    common(sp)

    sp = sub.add_parser("tomography", help="reconstruct a state from samples")
    sp.add_argument("--samples", required=True, help="sample file path")
    sp.add_argument("-E", "--cutoff", type=int, required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--eps-prime", type=float, required=True, dest="eps_prime")
    sp.add_argument("--hermitize", action="store_true")
    sp.add_argument(
        "--convergence",
        action="store_true",
        help="also write an estimate-vs-count table next to --out",
    )
    common(sp, seed=False)

    sp = sub.add_parser("certify", help="certify samples against a pure target")
    sp.add_argument("--target", required=True, help="target pure-state spec (JSON)")
    sp.add_argument("--samples", required=True, help="sample file path")
    sp.add_argument("--n", type=int, default=None, help="defaults to the file length")
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--s", type=int, required=True)
    sp.add_argument("-E", "--cutoff", type=int, required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--eps-prime", type=float, required=True, dest="eps_prime")
    common(sp, seed=False)

    sp = sub.add_parser("verify", help="simulate and post-process a verification run")
    sp.add_argument("--target", required=True, help="target pure-state spec (JSON)")
    sp.add_argument(
        "--state",
        default=None,
        help="prepared-state spec; defaults to honest preparation of the target",
    )
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--s", type=int, required=True)
    sp.add_argument("-E", "--cutoff", type=int, required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--eps-prime", type=float, required=True, dest="eps_prime")
    common(sp)

    sp = sub.add_parser("plan", help="samples needed for a tomography guarantee")
    sp.add_argument("-E", "--cutoff", type=int, required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--eps-prime", type=float, required=True, dest="eps_prime")
    sp.add_argument("--delta", type=float, required=True)
    common(sp, seed=False)

    sp = sub.add_parser("oracle", help="closed-form estimator expectations")
    sp.add_argument("--state", required=True, help="state spec (JSON)")
    sp.add_argument("--operator", required=True, help="operator spec (JSON)")
    sp.add_argument("--eta", type=float, required=True)
    sp.add_argument(
        "--quadrature",
        action="store_true",
        help="cross-check against numerical integration",
    )
    common(sp, seed=False)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    config = RunConfig(
        command=args.command,
        state_path=getattr(args, "state", None),
        target_path=getattr(args, "target", None),
        params=vars(args),
        seed=getattr(args, "seed", 0),
        output_path=getattr(args, "out", None),
    )
    try:
        run(config)
    except (ParameterError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InternalConsistencyError as exc:
        print(f"internal inconsistency: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0
