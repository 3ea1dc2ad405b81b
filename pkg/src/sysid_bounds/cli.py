"""Command-line interface.

Subcommands cover both bound inversions, worst-case neighbor construction,
the Monte Carlo verification harness, constant-input design, and parameter
sweeps. JSON is the canonical report format (flags and PRNG identifier are
embedded for auditability); CSV is a flat projection for plotting. Exit
codes are stable API: 0 ok, 2 bad input, 3 numerical failure, 4 horizon
exhausted, 5 bound unreachable under the policy.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys as _sys
from typing import List, Optional

import numpy as np

from .core import (
    AccuracySpec,
    BoundReport,
    ConstantPolicy,
    ControlledSystem,
    FeedbackPolicy,
    HorizonExhaustedError,
    InputError,
    NumericalError,
    UncontrolledSystem,
    UnreachableBoundError,
    matrix_from_json_dict,
    matrix_to_json_dict,
)
from . import controlled, sim, uncontrolled
from .spectral import eigenvalues_sorted

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_HORIZON = 4
EXIT_UNREACHABLE = 5

MAX_DIM = 64


def load_matrix(path: str, name: str) -> np.ndarray:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise InputError(f"{name}: cannot read '{path}': {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{name}: '{path}' is not valid JSON: {exc}") from exc
    return matrix_from_json_dict(obj, name)


def load_square(path: str, name: str) -> np.ndarray:
    A = load_matrix(path, name)
    if A.shape[0] != A.shape[1]:
        raise InputError(f"{name} must be square, got shape {A.shape}")
    if A.shape[0] > MAX_DIM:
        raise InputError(f"{name}: dimension {A.shape[0]} exceeds the {MAX_DIM} cap")
    return A


def _write_text(path: Optional[str], text: str) -> None:
    if path is None:
        _sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _json_text(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def _csv_text(header: List[str], rows: List[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating))
                         else v for v in row])
    return buf.getvalue()


def _flags(args: argparse.Namespace) -> dict:
    out = {}
    for key, value in sorted(vars(args).items()):
        if key == "func":
            continue
        out[key] = value
    return out


def _parse_accuracy(args) -> AccuracySpec:
    return AccuracySpec(eps=args.eps, delta=args.delta)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_bound_uncontrolled(args) -> int:
    A = load_square(args.A, "A")
    spec = _parse_accuracy(args)
    reports: List[BoundReport] = []
    if args.method in ("gramian", "both"):
        reports.append(uncontrolled.sample_complexity_gramian(A, spec))
    if args.method in ("spectral", "both"):
        reports.append(uncontrolled.sample_complexity_spectral(A, spec))
    report = {
        "reports": [r.to_dict() for r in reports],
        "flags": _flags(args),
        "prng": sim.PRNG_ID,
    }
    if args.format == "json":
        _write_text(args.output, _json_text(report))
    else:
        rows = [[r.method, t, v] for r in reports for t, v in r.curve]
        _write_text(args.output, _csv_text(["method", "t", "info_value"], rows))
    return EXIT_OK


def cmd_confuse(args) -> int:
    A = load_square(args.A, "A")
    if args.eps <= 0:
        raise InputError(f"eps must be positive, got {args.eps}")
    if args.kind == "gramian":
        inst = uncontrolled.confusing_gramian(A, args.eps, args.t)
    else:
        inst = uncontrolled.confusing_schur(A, args.eps)
    _write_text(args.output, _json_text(matrix_to_json_dict(inst.Aprime)))
    meta = {
        "kind": inst.kind,
        "distance": inst.distance,
        "lambda_d_abs": float(abs(eigenvalues_sorted(A)[-1])),
        "t": args.t,
        "expected_llr": uncontrolled.expected_llr(A, inst.Aprime, args.t),
        "flags": _flags(args),
        "prng": sim.PRNG_ID,
    }
    _sys.stdout.write(_json_text(meta))
    return EXIT_OK


def cmd_verify(args) -> int:
    A = load_square(args.A, "A")
    spec = _parse_accuracy(args)
    report = sim.tightness_report(UncontrolledSystem(A), spec, args.trials,
                                  args.seed, args.tmax)
    report["flags"] = _flags(args)
    if args.format == "json":
        _write_text(args.output, _json_text(report))
    else:
        rows = [[t, f] for t, f in report["success_curve"]]
        _write_text(args.output, _csv_text(["t", "success_fraction"], rows))
    return EXIT_OK


def _parse_policy(text: str, p: int):
    if text.startswith("constant:"):
        values = text[len("constant:"):]
        try:
            u = np.array([float(v) for v in values.split(",")])
        except ValueError as exc:
            raise InputError(f"--input: cannot parse constant vector '{values}'") from exc
        if u.size != p:
            raise InputError(f"--input: constant vector has length {u.size}, expected {p}")
        return ConstantPolicy(u=u)
    if text.startswith("feedback:"):
        rest = text[len("feedback:"):]
        parts = rest.split(",")
        if len(parts) < 2:
            raise InputError("--input: feedback needs '<Kfile>,<c1>[,<c2>...]'")
        K = load_matrix(parts[0], "K")
        try:
            c = np.array([float(v) for v in parts[1:]])
        except ValueError as exc:
            raise InputError(f"--input: cannot parse offset vector '{parts[1:]}'") from exc
        return FeedbackPolicy(K=K, c=c)
    raise InputError(
        f"--input must look like 'constant:<v1,v2,...>' or 'feedback:<Kfile>,<cvec>', got '{text}'"
    )


def cmd_bound_controlled(args) -> int:
    A = load_square(args.A, "A")
    B = load_matrix(args.B, "B")
    if B.shape[1] > MAX_DIM:
        raise InputError(f"B: input dimension {B.shape[1]} exceeds the {MAX_DIM} cap")
    sys_ = ControlledSystem(A, B)
    spec = _parse_accuracy(args)
    policy = _parse_policy(args.input, sys_.p)
    report_obj = controlled.sample_complexity_controlled(
        sys_, spec, policy, trials=args.trials, seed=args.seed)
    report = report_obj.to_dict()
    if sys_.d == 1 and sys_.p == 1 and isinstance(policy, ConstantPolicy):
        scalar = controlled.sample_complexity_scalar_constant(
            float(A[0, 0]), float(B[0, 0]), spec, float(policy.u[0]), args.variant)
        report["scalar_closed_form"] = {"variant": args.variant, "tau": scalar.tau}
    report["flags"] = _flags(args)
    report["prng"] = sim.PRNG_ID
    if args.format == "json":
        _write_text(args.output, _json_text(report))
    else:
        rows = [[t, v] for t, v in report["curve"]]
        _write_text(args.output, _csv_text(["t", "info_value"], rows))
    return EXIT_OK


def cmd_design_input(args) -> int:
    spec = _parse_accuracy(args)
    result = controlled.design_constant_input(args.a, args.b, spec, args.umax)
    report = {
        "ustar": result.ustar,
        "taustar": result.taustar,
        "monotone_nonincreasing": result.monotone_nonincreasing,
        "flat_objective": result.flat_objective,
        "flags": _flags(args),
        "prng": sim.PRNG_ID,
    }
    _write_text(args.output, _json_text(report))
    return EXIT_OK


def _random_orthogonal(d: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    return Q * np.sign(np.diag(R))


def cmd_sweep(args) -> int:
    parts = args.family.split(":")
    spec = _parse_accuracy(args)
    rows = []
    if parts[0] == "scalar":
        if len(parts) != 4:
            raise InputError("--family scalar needs 'scalar:a0:a1:n'")
        try:
            a0, a1, n = float(parts[1]), float(parts[2]), int(parts[3])
        except ValueError as exc:
            raise InputError(f"--family: cannot parse '{args.family}'") from exc
        if n < 1:
            raise InputError(f"--family: n must be >= 1, got {n}")
        for a in np.linspace(a0, a1, n):
            A = np.array([[float(a)]])
            rg = uncontrolled.sample_complexity_gramian(A, spec)
            rs = uncontrolled.sample_complexity_spectral(A, spec)
            rows.append([float(a), rg.tau, rs.tau, rg.threshold])
    elif parts[0] == "scaled-orthogonal":
        if len(parts) != 5:
            raise InputError(
                "--family scaled-orthogonal needs 'scaled-orthogonal:rho0:rho1:n:d'")
        try:
            r0, r1, n, d = float(parts[1]), float(parts[2]), int(parts[3]), int(parts[4])
        except ValueError as exc:
            raise InputError(f"--family: cannot parse '{args.family}'") from exc
        if n < 1:
            raise InputError(f"--family: n must be >= 1, got {n}")
        if not 1 <= d <= MAX_DIM:
            raise InputError(f"--family: d must lie in [1, {MAX_DIM}], got {d}")
        for i, rho in enumerate(np.linspace(r0, r1, n)):
            O = _random_orthogonal(d, sim.substream_seed(args.seed, i))
            A = float(rho) * O
            rg = uncontrolled.sample_complexity_gramian(A, spec)
            rs = uncontrolled.sample_complexity_spectral(A, spec)
            rows.append([float(rho), rg.tau, rs.tau, rg.threshold])
    else:
        raise InputError(
            f"--family must start with 'scalar:' or 'scaled-orthogonal:', got '{args.family}'")
    _write_text(args.output,
                _csv_text(["param", "tau_gramian", "tau_spectral", "threshold"], rows))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sysid-bounds",
        description="Sample-complexity lower bounds for linear system "
                    "identification, worst-case neighbor systems, and a "
                    "seeded Monte Carlo verification harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_accuracy(p):
        p.add_argument("--eps", type=float, required=True,
                       help="Frobenius-norm accuracy target (> 0)")
        p.add_argument("--delta", type=float, required=True,
                       help="failure probability in (0, 1)")

    def add_output(p, formats=True):
        p.add_argument("--output", default=None,
                       help="output file (default: stdout)")
        if formats:
            p.add_argument("--format", choices=["json", "csv"], default="json",
                           help="report format (default: json)")

    p = sub.add_parser("bound-uncontrolled",
                       help="lower bounds for x_{t+1} = A x_t + w_t")
    p.add_argument("--A", required=True, help="matrix JSON file for A")
    add_accuracy(p)
    p.add_argument("--method", choices=["gramian", "spectral", "both"],
                   default="both")
    add_output(p)
    p.set_defaults(func=cmd_bound_uncontrolled)

    p = sub.add_parser("confuse",
                       help="construct the worst-case neighbor system A'")
    p.add_argument("--A", required=True, help="matrix JSON file for A")
    p.add_argument("--eps", type=float, required=True,
                   help="Frobenius-norm accuracy target (> 0)")
    p.add_argument("--kind", choices=["schur", "gramian"], default="schur")
    p.add_argument("--t", type=int, default=10,
                   help="horizon for the gramian direction and the reported "
                        "expected log-likelihood ratio (default 10)")
    p.add_argument("--output", required=True, help="file for the A' matrix JSON")
    p.set_defaults(func=cmd_confuse)

    p = sub.add_parser("verify",
                       help="Monte Carlo tightness check of the bounds")
    p.add_argument("--A", required=True, help="matrix JSON file for A")
    add_accuracy(p)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tmax", type=int, default=1_000_000)
    add_output(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bound-controlled",
                       help="lower bounds for x_{t+1} = A x_t + B u_t + w_t")
    p.add_argument("--A", required=True, help="matrix JSON file for A")
    p.add_argument("--B", required=True, help="matrix JSON file for B")
    add_accuracy(p)
    p.add_argument("--input", required=True,
                   help="policy: 'constant:<v1,v2,...>' or 'feedback:<Kfile>,<cvec>'")
    p.add_argument("--variant", choices=["paper", "theorem2"], default="theorem2",
                   help="scalar closed-form variant for the cross-check")
    p.add_argument("--trials", type=int, default=None,
                   help="switch to Monte Carlo moment evaluation with this many trials")
    p.add_argument("--seed", type=int, default=0)
    add_output(p)
    p.set_defaults(func=cmd_bound_controlled)

    p = sub.add_parser("design-input",
                       help="search the constant input amplitude minimizing the scalar bound")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    add_accuracy(p)
    p.add_argument("--umax", type=float, required=True)
    add_output(p, formats=False)
    p.set_defaults(func=cmd_design_input)

    p = sub.add_parser("sweep",
                       help="CSV sweep over a system family")
    p.add_argument("--family", required=True,
                   help="'scalar:a0:a1:n' or 'scaled-orthogonal:rho0:rho1:n:d'")
    add_accuracy(p)
    p.add_argument("--seed", type=int, default=0,
                   help="seed for the per-row random orthogonal factors")
    p.add_argument("--output", default=None, help="output file (default: stdout)")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_INPUT
    except HorizonExhaustedError as exc:
        print(f"error: horizon exhausted: {exc}", file=_sys.stderr)
        return EXIT_HORIZON
    except UnreachableBoundError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_UNREACHABLE
    except NumericalError as exc:
        print(f"error: numerical failure: {exc}", file=_sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
