"""Command-line front end.

Every subcommand prints a short human summary and, with ``--json PATH``,
writes a machine-readable report (schema ``comblab-report/1``).

Exit codes: 0 verdict reached or check passed, 2 check failed or verdict
inconclusive, 3 numerical failure, 4 malformed input or usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .comb import (
    Comb,
    circuit_from_dict,
    circuit_to_dict,
    comb_from_dict,
    comb_to_dict,
    compile_circuit,
    verify_causality,
)
from .config import DEFAULT_TOL, Tolerances
from .errors import (
    CausalityError,
    DimensionError,
    LabelError,
    MalformedInputError,
    NotHermitianError,
    NotPSDError,
    RoleError,
    SolverError,
)
from .tensorlab import Operator, operator_from_dict, operator_to_dict

log = logging.getLogger("comblab")

SCHEMA = "comblab-report/1"
EXIT_OK, EXIT_FAIL, EXIT_NUMERIC, EXIT_INPUT = 0, 2, 3, 4
FIXTURE_TOL = 1e-5

EXAMPLES = ("w-comb", "ghz-comb", "bisep", "bisep-cond", "sqrt-swap", "app-g", "fig4", "fig5", "fig6")


class UsageError(Exception):
    """Raised instead of argparse's own exit so usage problems map to exit 4."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D401 - argparse hook
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


class Report:
    """Accumulates the JSON report for one invocation."""

    def __init__(self, argv: list[str], tol: Tolerances):
        self.data = {
            "schema": SCHEMA,
            "version": __version__,
            "command": list(argv),
            "inputs": {},
            "tolerances": dataclasses.asdict(tol),
            "verdicts": {},
            "residuals": {},
            "values": {},
            "seeds": {},
            "timing": {},
            "exit_code": None,
        }
        self._t0 = time.perf_counter()

    def add_input(self, path: str) -> None:
        self.data["inputs"][path] = hashlib.sha256(Path(path).read_bytes()).hexdigest()

    def verdict(self, name: str, verdict: str, value: float | None = None, **extra) -> None:
        entry = {"verdict": verdict, "value": _num(value)}
        entry.update({k: _jsonable(v) for k, v in extra.items()})
        self.data["verdicts"][name] = entry

    def residual(self, name: str, value: float) -> None:
        self.data["residuals"][name] = _num(value)

    def value(self, name: str, value) -> None:
        self.data["values"][name] = _jsonable(value)

    def finish(self, code: int) -> dict:
        self.data["exit_code"] = code
        self.data["timing"]["total_seconds"] = time.perf_counter() - self._t0
        return self.data


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if np.isfinite(x) else str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return _num(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


# -- input handling -----------------------------------------------------------

def _read_json(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise MalformedInputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedInputError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(payload, dict):
        raise MalformedInputError(f"{path}: expected a JSON object")
    return payload


def load_comb(path: str, report: Report, tol: Tolerances = DEFAULT_TOL) -> Comb:
    """Comb from comb JSON, circuit JSON (compiled) or a bare operator (default legs)."""
    from .constructions.examples import alternating_legs

    payload = _read_json(path)
    report.add_input(path)
    if "initial" in payload:
        report.value("input_kind", "circuit")
        return compile_circuit(circuit_from_dict(payload), tol, check=False)
    if "legs" in payload:
        report.value("input_kind", "comb")
        if payload.get("rounded_data"):
            # the file says its entries are rounded; checks use the loose tolerance
            report.value("rounded_data", True)
        return comb_from_dict(payload)
    op = operator_from_dict(payload)
    report.value("input_kind", "operator (alternating legs assumed, last leg measured)")
    return Comb(op, alternating_legs(op.labels))


def load_operator(path: str, report: Report) -> Operator:
    payload = _read_json(path)
    report.add_input(path)
    if "initial" in payload:
        report.value("input_kind", "circuit")
        return compile_circuit(circuit_from_dict(payload), check=False).op
    report.value("input_kind", "comb" if "legs" in payload else "operator")
    return operator_from_dict(payload)


def _write_json(path: str, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True, allow_nan=True))


# -- subcommands --------------------------------------------------------------

def cmd_verify(args, report: Report) -> int:
    tol = DEFAULT_TOL.replace(causality=args.tol)
    report.data["tolerances"] = dataclasses.asdict(tol)
    c = load_comb(args.file, report, tol)
    loose = args.loose or bool(report.data["values"].get("rounded_data"))
    if loose and not args.loose:
        print("  input declares rounded data: using the loose tolerance")
    rep = verify_causality(c, tol, loose=loose)
    for name, r in rep.levels:
        print(f"  {name:<40s} residual {r:.3e}")
        report.residual(name, r)
    print(f"  min eigenvalue {rep.min_eig:.3e}")
    verdict = "pass" if rep.passed else "fail"
    print(f"causality: {verdict} (tolerance {rep.tolerance:g}{', loose' if rep.loose else ''})")
    report.verdict("causality", verdict, rep.max_residual, min_eig=rep.min_eig, tolerance=rep.tolerance)
    return EXIT_OK if rep.passed else EXIT_FAIL


def _fixture_value(path: str, report: Report) -> float:
    payload = _read_json(path)
    report.add_input(path)
    if "value" not in payload:
        raise MalformedInputError(f"{path}: fixture needs a 'value' field")
    return float(payload["value"])


def cmd_gme(args, report: Report) -> int:
    from .entanglement import gme_witness

    rho = load_operator(args.file, report)
    expected = _fixture_value(args.fixture, report) if args.fixture else None
    report.data["tolerances"]["psd"] = args.psd_tol
    report.data["tolerances"]["fixture"] = FIXTURE_TOL
    rep = gme_witness(rho, DEFAULT_TOL, psd_tol=args.psd_tol)
    report.value("solver", rep.solver)
    report.value("scale", rep.scale)
    for name, r in rep.residuals.items():
        report.residual(f"decomposition {name}", r)
    if rep.status != "optimal":
        print(f"solver did not converge: {rep.status}")
        report.verdict("gme", "no-verdict", rep.value, status=rep.status)
        return EXIT_NUMERIC
    # the optimum is computed on the unit-trace operator; without --normalize
    # the reported value is rescaled back to the input's own trace
    shown = rep.value if args.normalize else rep.value * rep.scale
    print(f"witness value {shown:.8f} ({'unit trace' if args.normalize else f'input trace {rep.scale:g}'})")
    print(f"verdict: {rep.verdict}")
    report.verdict("gme", rep.verdict, shown, unit_trace_value=rep.value, normalized=args.normalize)
    if args.output:
        _write_json(args.output, operator_to_dict(rep.witness))
        print(f"witness written to {args.output}")
    code = EXIT_OK if rep.verdict in ("GME", "PPT-mixture") else EXIT_FAIL
    if expected is not None:
        diff = abs(rep.value - expected)
        ok = diff <= FIXTURE_TOL
        print(f"fixture {expected:.8f}: |difference| {diff:.2e} ({'match' if ok else 'MISMATCH'})")
        report.verdict("fixture", "match" if ok else "mismatch", diff, expected=expected, tolerance=FIXTURE_TOL)
        if not ok:
            code = EXIT_FAIL
    return code


def cmd_ppt(args, report: Report) -> int:
    from .entanglement import CutSpec, ppt_min_eig

    rho = load_operator(args.file, report)
    cut = CutSpec.parse(args.cut)
    cut.check_covers(rho.labels)
    lam = ppt_min_eig(rho, cut)
    sides = [rho.dims_of(s) for s in (cut.left, cut.right)]
    exact = min(sides) == 2 and max(sides) <= 3
    if lam < -DEFAULT_TOL.psd:
        verdict = "NPT"
    else:
        verdict = "PPT" if exact else "PPT-inconclusive"
    print(f"min eigenvalue of the partial transpose across {args.cut}: {lam:.10f}")
    print(f"verdict: {verdict}")
    report.verdict("ppt", verdict, lam, cut=args.cut)
    return EXIT_OK


def build_example(name: str, n: int, p: float | None):
    from .constructions import examples as ex

    if name == "w-comb":
        return ex.example_w_comb()
    if name == "ghz-comb":
        return ex.example_ghz_comb(n)
    if name == "bisep":
        return ex.example_bisep_k(0.6 if p is None else p)
    if name == "bisep-cond":
        return ex.example_bisep_conditional(0.45 if p is None else p)
    if name == "sqrt-swap":
        return ex.example_sqrt_swap_comb()
    if name == "app-g":
        return ex.example_appg_comb()
    if name == "fig4":
        return ex.circuit_bob_controls()
    if name == "fig5":
        return ex.circuit_alice_cz()
    if name == "fig6":
        return ex.circuit_bell_teleport()
    raise UsageError(f"unknown example {name!r}")


def cmd_example(args, report: Report) -> int:
    try:
        obj = build_example(args.name, args.n, args.p)
    except ValueError as exc:
        raise MalformedInputError(str(exc)) from None
    payload = comb_to_dict(obj) if isinstance(obj, Comb) else circuit_to_dict(obj)
    if args.name == "app-g":
        payload["rounded_data"] = True
    kind = "comb" if isinstance(obj, Comb) else "circuit"
    params = {"n": args.n} if args.name == "ghz-comb" else {"p": args.p} if args.name.startswith("bisep") else {}
    report.value("example", {"name": args.name, "kind": kind, **params})
    if args.output:
        _write_json(args.output, payload)
        print(f"{args.name} ({kind}) written to {args.output}")
    else:
        print(json.dumps(payload))
    report.verdict("example", "written", None, kind=kind)
    return EXIT_OK


def cmd_scan(args, report: Report) -> int:
    from .constructions.scan import conditional_scan

    c = load_comb(args.file, report)
    rep = conditional_scan(c, args.samples, args.seed, party=args.party, sampling=args.sampling,
                           backend=args.backend)
    report.data["seeds"]["scan"] = args.seed
    report.data["timing"]["scan_seconds"] = rep.elapsed
    report.value("scan", rep.to_dict())
    for key, val in rep.minima.items():
        arg = rep.argmin.get(key, {})
        where = f" at theta={arg['theta']:.6f}, phi={arg['phi']:.6f}" if arg else ""
        print(f"  lambda_min({key}) = {val:.6f}{where}  (skipped {rep.skipped[key]})")
    if any(np.isnan(v) for v in rep.minima.values()):
        print("verdict: inconclusive (every sample had zero probability for some party)")
        report.verdict("scan", "inconclusive", None)
        return EXIT_FAIL
    verdict = "all-positive" if rep.all_positive else "conditionally-entangled"
    print(f"verdict: {verdict}  [{rep.samples} samples, seed {rep.seed}, {rep.backend} backend]")
    report.verdict("scan", verdict, min(rep.minima.values()), minima=rep.minima)
    return EXIT_OK


def cmd_seesaw(args, report: Report) -> int:
    from .constructions.seesaw import SeesawOptions, seesaw

    opts = SeesawOptions(iterations=args.iters, eps_margin=args.eps, scan_constraint_count=args.effects,
                         scan_samples=args.samples, scan_seed=args.scan_seed)
    res = seesaw((2, 2, 2), args.seed, opts)
    audit = res.audit()
    report.data["seeds"].update(seesaw=args.seed, scan=args.scan_seed)
    report.data["timing"]["seesaw_seconds"] = audit.pop("elapsed")
    report.value("seesaw", {k: v for k, v in audit.items() if k != "trace"})
    if args.audit:
        _write_json(args.audit, _jsonable(dict(audit, options=dataclasses.asdict(opts))))
    for entry in audit["trace"]:
        if "witness_value" in entry:
            print(f"  iteration {entry['iteration']:>3d}: witness {entry['witness_value']:+.6f}")
    if res.candidate is None:
        print(f"no candidate after {res.state.iteration} iterations (last witness {res.witness_value:+.6f})")
        report.verdict("seesaw", "no-candidate", res.witness_value)
        return EXIT_FAIL
    mins = res.scan.minima
    print(f"candidate: witness {res.witness_value:+.6f}, scan minima "
          + ", ".join(f"{k} {v:.5f}" for k, v in mins.items()))
    report.verdict("seesaw", "candidate", res.witness_value, scan_minima=mins)
    if args.output:
        _write_json(args.output, comb_to_dict(res.candidate))
        print(f"candidate written to {args.output}")
    return EXIT_OK


def cmd_dilate(args, report: Report) -> int:
    from .constructions.dilation import dilate

    c = load_comb(args.file, report)
    d = dilate(c)
    report.residual("round_trip", d.residual)
    report.verdict("dilation", "found", d.residual, environment=d.env_label,
                   environment_dim=d.circuit.initial.dim_of(d.env_label))
    print(f"dilation found: environment {d.env_label}, discarded output {d.discard_label}, "
          f"round-trip residual {d.residual:.2e}")
    if args.output:
        _write_json(args.output, circuit_to_dict(d.circuit))
        print(f"circuit written to {args.output}")
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", metavar="PATH", help="write a machine-readable report here")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = _Parser(prog="comblab", description="Quantum combs and their entanglement structure.",
                     formatter_class=fmt)
    parser.add_argument("--version", action="version", version=f"comblab {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    p = sub.add_parser("verify", parents=[common], formatter_class=fmt, help="check the causality conditions")
    p.add_argument("file")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL.causality, help="residual tolerance")
    p.add_argument("--loose", action="store_true", help="use the loose tolerance for rounded data")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gme", parents=[common], formatter_class=fmt, help="optimal decomposable GME witness")
    p.add_argument("file")
    p.add_argument("--normalize", action="store_true", help="report the value for the unit-trace operator")
    p.add_argument("--fixture", metavar="REF", help="reference JSON with a unit-trace 'value' to compare against")
    p.add_argument("-o", "--output", metavar="PATH", help="write the witness operator here")
    p.add_argument("--psd-tol", type=float, default=DEFAULT_TOL.psd, help="accepted negative eigenvalue (relative)")
    p.set_defaults(func=cmd_gme)

    p = sub.add_parser("ppt", parents=[common], formatter_class=fmt, help="smallest eigenvalue of a partial transpose")
    p.add_argument("file")
    p.add_argument("--cut", required=True, help="bipartition such as A:BC")
    p.set_defaults(func=cmd_ppt)

    p = sub.add_parser("example", parents=[common], formatter_class=fmt, help="write a named comb or circuit")
    p.add_argument("name", choices=EXAMPLES)
    p.add_argument("--n", type=int, default=3, help="number of parties for ghz-comb")
    p.add_argument("--p", type=float, default=None, help="mixing parameter (bisep 0.6, bisep-cond 0.45)")
    p.add_argument("-o", "--output", metavar="PATH", help="output file (stdout if omitted)")
    p.set_defaults(func=cmd_example)

    p = sub.add_parser("scan", parents=[common], formatter_class=fmt, help="conditional PPT scan over projective effects")
    p.add_argument("file")
    p.add_argument("--samples", type=int, default=500_000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--party", default="all", help="leg to condition on, or 'all'")
    p.add_argument("--sampling", choices=("rectangle", "haar"), default="rectangle")
    p.add_argument("--backend", choices=("auto", "compiled", "numpy"), default="auto")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("seesaw", parents=[common], formatter_class=fmt,
                       help="search for a GME comb without conditional entanglement")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iters", type=int, default=30)
    p.add_argument("--eps", type=float, default=0.01, help="strict PPT margin on the constrained effects")
    p.add_argument("--effects", type=int, default=1000, help="constrained effects per party")
    p.add_argument("--samples", type=int, default=500_000, help="samples in the acceptance scan")
    p.add_argument("--scan-seed", type=int, default=12345)
    p.add_argument("-o", "--output", metavar="PATH", help="write the candidate comb here")
    p.add_argument("--audit", metavar="PATH", help="write the iteration audit here")
    p.set_defaults(func=cmd_seesaw)

    p = sub.add_parser("dilate", parents=[common], formatter_class=fmt, help="circuit realizing a two-step comb")
    p.add_argument("file")
    p.add_argument("-o", "--output", metavar="PATH", help="write the circuit here")
    p.set_defaults(func=cmd_dilate)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    report = Report(argv, DEFAULT_TOL)
    try:
        code = args.func(args, report)
    except (MalformedInputError, LabelError, DimensionError, RoleError, NotHermitianError, NotPSDError,
            UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        report.verdict("input", "malformed", None, message=str(exc))
        code = EXIT_INPUT
    except CausalityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        report.verdict("causality", "fail", None, message=str(exc))
        code = EXIT_FAIL
    except (SolverError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        report.verdict("numerics", "failure", None, message=str(exc))
        code = EXIT_NUMERIC
    if args.json:
        _write_json(args.json, _jsonable(report.finish(code)))
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
