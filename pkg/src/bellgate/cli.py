"""Command-line front end.

Exit codes: 0 success, 1 input/output failure, 2 invalid input, 3 no violation,
4 certification failure (also used when a ``verify-paper`` row fails).  Every
run writes exactly one manifest, to stderr or to ``--manifest``.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import __version__
from .bell import (BellInequality, classical_bound, eta_threshold_at_lambda, eta_threshold_universal,
                   evaluate, inequality_noise_threshold, noise_threshold, quantum_terms)
from .errors import (BellgateError, CapExceeded, CertificationFailure, DegenerateFace, ModelInvalid,
                     NotOnBoundary, NotUniversal, NoViolation, ScenarioMismatch, SolverFailure)
from .io import digest, dumps, read_json
from .quantum import PhaseSettings, correlations
from .scenario import CorrelationTable, Scenario

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_NO_VIOLATION, EXIT_CERT = 0, 1, 2, 3, 4


class InputError(Exception):
    """Malformed or inconsistent input file."""


@dataclass
class RunManifest:
    command: str
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    seed: int | None = None
    tool_version: str = __version__
    exit_code: int = 0

    def to_dict(self) -> dict:
        return {"command": self.command, "inputs": self.inputs, "outputs": self.outputs,
                "seed": self.seed, "tool_version": self.tool_version, "exit_code": self.exit_code}


class Context:
    def __init__(self, args: argparse.Namespace, argv: list[str]):
        self.args = args
        self.manifest = RunManifest(" ".join(["bellgate", *argv]))

    def load(self, path: str):
        p = Path(path)
        try:
            data = read_json(p)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: not valid JSON ({exc})") from exc
        self.manifest.inputs[str(path)] = digest(p)
        return data

    def emit(self, obj) -> None:
        text = dumps(obj)
        out = getattr(self.args, "out", None)
        if out:
            Path(out).write_text(text)
            self.manifest.outputs.append(str(out))
        else:
            sys.stdout.write(text)
            self.manifest.outputs.append("<stdout>")


def _parse(builder, data, what: str):
    try:
        return builder(data)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise InputError(f"invalid {what}: {exc}") from exc


def _scenario_and_phases(ctx: Context) -> tuple[Scenario, PhaseSettings]:
    s = _parse(Scenario.from_dict, ctx.load(ctx.args.scenario), "scenario")
    ph = _parse(PhaseSettings.from_dict, ctx.load(ctx.args.phases), "phases")
    if ph.scenario != s:
        raise ScenarioMismatch(f"phases describe {ph.scenario} but the scenario file says {s}")
    return s, ph


# ---------------------------------------------------------------- commands

def cmd_correlations(ctx: Context) -> int:
    s, ph = _scenario_and_phases(ctx)
    a = ctx.args
    t = correlations(s, ph, a.eta, a.lam, a.noise_p)
    t.check(1e-12)
    ctx.emit(t.to_dict())
    return EXIT_OK


def cmd_threshold(ctx: Context) -> int:
    from .lhv import eta_threshold_fixed_lambda, eta_threshold_forall_lambda

    s, ph = _scenario_and_phases(ctx)
    a = ctx.args
    if a.forall_lambda:
        rep = eta_threshold_forall_lambda(s, ph)
    else:
        rep = eta_threshold_fixed_lambda(s, ph, a.lam, a.tol)
    ctx.emit(rep.to_dict())
    if not rep.violated:
        print("no efficiency in [0, 1] rules out local models for these settings", file=sys.stderr)
        return EXIT_NO_VIOLATION
    return EXIT_OK


def _inequality(ctx: Context):
    """Registry entry (or None) and inequality for the ``target`` argument."""
    from .registry import lookup

    target = ctx.args.target
    if Path(target).is_file():
        ineq = _parse(BellInequality.from_dict, ctx.load(target), "inequality")
        return None, ineq
    try:
        entry = lookup(target, ctx.args.d)
    except KeyError as exc:
        raise InputError(str(exc.args[0])) from exc
    return entry, entry.inequality


def _phases_for(ctx: Context, entry, ineq: BellInequality) -> PhaseSettings:
    if ctx.args.phases:
        ph = _parse(PhaseSettings.from_dict, ctx.load(ctx.args.phases), "phases")
    elif entry is not None:
        ph = entry.optimal_phases
    else:
        raise InputError("an inequality file needs --phases")
    if ph.scenario != ineq.scenario:
        raise ScenarioMismatch(f"phases describe {ph.scenario}, inequality is for {ineq.scenario}")
    return ph


def _num(x):
    return x if isinstance(x, Fraction) else float(x)


def cmd_inequality(ctx: Context) -> int:
    from .registry import names

    a = ctx.args
    if a.action == "list":
        ctx.emit({"inequalities": names(), "families": {"chsh_d": "two settings, any d >= 2 (use --d)"}})
        return EXIT_OK
    if a.target is None:
        raise InputError(f"'{a.action}' needs an inequality name or file")
    entry, ineq = _inequality(ctx)
    if a.action == "bound":
        value, strat = classical_bound(ineq, results_only=a.results_only)
        ctx.emit({"bound": _num(value), "maximiser": {"alice": list(strat.alice), "bob": list(strat.bob)}})
        return EXIT_OK
    if a.action == "evaluate":
        if a.correlations:
            t = _parse(CorrelationTable.from_dict, ctx.load(a.correlations), "correlation table")
            if t.scenario != ineq.scenario:
                raise ScenarioMismatch(f"table is for {t.scenario}, inequality for {ineq.scenario}")
            dec = evaluate(ineq, t)
        else:
            dec = quantum_terms(ineq, _phases_for(ctx, entry, ineq))
        ctx.emit({"value": dec.total, "i_rr": dec.i_rr, "i_0r": dec.i_0r, "i_r0": dec.i_r0, "i_00": dec.i_00,
                  "bound": _num(ineq.bound), "violated": dec.total > float(ineq.bound) + 1e-12})
        return EXIT_OK
    # thresholds
    ph = _phases_for(ctx, entry, ineq)
    out: dict = {}
    if quantum_terms(ineq, ph).i_rr <= float(ineq.bound):
        raise NoViolation("the ideal correlations do not violate this inequality")
    try:
        out["eta_universal"] = eta_threshold_universal(ineq, ph)
    except NotUniversal:
        out["eta_universal"] = None
    out["eta_at_lambda"] = {repr(lam): eta_threshold_at_lambda(ineq, ph, lam) for lam in a.lambdas}
    out["noise_p"] = noise_threshold(ineq, ph)
    out["noise_p_inequality"] = inequality_noise_threshold(ineq, ph)
    ctx.emit(out)
    return EXIT_OK


def cmd_extract(ctx: Context) -> int:
    from .facet import extract
    from .lhv import ThresholdReport

    s, ph = _scenario_and_phases(ctx)
    rep = _parse(ThresholdReport.from_dict, ctx.load(ctx.args.report), "threshold report")
    x = extract(s, ph, rep)
    out = x.inequality.to_dict()
    out["certificate"] = x.certificate
    out["eta_threshold"] = x.eta_extracted
    ctx.emit(out)
    return EXIT_OK


def cmd_search(ctx: Context) -> int:
    from .optimize import SearchConfig, search

    a = ctx.args
    s = Scenario(a.d, a.na, a.nb)
    objective = "forall_lambda" if a.lam is None else "fixed_lambda"
    cfg = SearchConfig(objective=objective, lam=a.lam or 1.0, restarts=a.restarts, rng_seed=a.seed,
                       max_evals=a.max_evals, simplex_tolerance=a.simplex_tolerance, hops=a.hops)
    ctx.manifest.seed = a.seed
    res = search(s, cfg, jobs=a.jobs, keep_trace=a.trace is not None)
    if a.trace:
        Path(a.trace).write_text(res.trace.jsonl())
        ctx.manifest.outputs.append(str(a.trace))
    ctx.emit(res.to_dict())
    return EXIT_OK


def cmd_verify_paper(ctx: Context) -> int:
    from .reproduce import run

    def show(row):
        mark = "PASS" if row.passed else "FAIL"
        value = row.error or (f"{row.value}" if not isinstance(row.value, float) else f"{row.value:.6f}")
        print(f"{mark}  [{row.group}] {row.label}: {value} (expected {row.expected}, tol {row.tolerance})",
              file=sys.stderr, flush=True)

    rows = run(ctx.args.subset, show)
    failed = sum(not r.passed for r in rows)
    ctx.emit({"subset": ctx.args.subset, "passed": len(rows) - failed, "failed": failed,
              "rows": [r.to_dict() for r in rows]})
    return EXIT_CERT if failed else EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bellgate", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--manifest", help="write the run manifest here instead of stderr")
    p.add_argument("--jobs", type=int, default=1, help="maximum worker processes")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("correlations", help="detected correlation table for given phases")
    c.add_argument("scenario")
    c.add_argument("phases")
    c.add_argument("--eta", type=float, default=1.0)
    c.add_argument("--lambda", dest="lam", type=float, default=1.0)
    c.add_argument("--noise-p", type=float, default=0.0)
    c.add_argument("--out")
    c.set_defaults(func=cmd_correlations)

    t = sub.add_parser("threshold", help="detection-efficiency threshold by linear programming")
    t.add_argument("scenario")
    t.add_argument("phases")
    g = t.add_mutually_exclusive_group(required=True)
    g.add_argument("--lambda", dest="lam", type=float)
    g.add_argument("--forall-lambda", action="store_true")
    t.add_argument("--tol", type=float, default=1e-6)
    t.add_argument("--out")
    t.set_defaults(func=cmd_threshold)

    q = sub.add_parser("inequality", help="bound, evaluate or analyse a Bell inequality")
    q.add_argument("action", choices=["bound", "evaluate", "thresholds", "list"])
    q.add_argument("target", nargs="?", help="registry name or inequality JSON file")
    q.add_argument("--d", type=int)
    q.add_argument("--phases")
    q.add_argument("--correlations")
    q.add_argument("--results-only", action="store_true")
    q.add_argument("--lambda", dest="lambdas", type=float, action="append")
    q.add_argument("--out")
    q.set_defaults(func=cmd_inequality)

    x = sub.add_parser("extract", help="Bell inequality from the local model at threshold")
    x.add_argument("scenario")
    x.add_argument("phases")
    x.add_argument("report")
    x.add_argument("--out")
    x.set_defaults(func=cmd_extract)

    s = sub.add_parser("search", help="optimise measurement phases")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--na", type=int, required=True)
    s.add_argument("--nb", type=int, required=True)
    s.add_argument("--lambda", dest="lam", type=float, help="fixed lambda (default: every lambda)")
    s.add_argument("--restarts", type=int, default=50)
    s.add_argument("--hops", type=int, default=None)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-evals", type=int, default=2000)
    s.add_argument("--simplex-tolerance", type=float, default=1e-4)
    s.add_argument("--trace", help="write the evaluation trace as JSON lines")
    s.add_argument("--out")
    s.set_defaults(func=cmd_search)

    v = sub.add_parser("verify-paper", help="recompute the reference values")
    v.add_argument("--subset", choices=["quick", "full"], default="quick")
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify_paper)
    return p


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, NoViolation):
        return EXIT_NO_VIOLATION
    if isinstance(exc, (NotOnBoundary, CertificationFailure, DegenerateFace)):
        return EXIT_CERT
    if isinstance(exc, (InputError, ModelInvalid, ScenarioMismatch, NotUniversal, CapExceeded, ValueError)):
        return EXIT_INVALID
    if isinstance(exc, (OSError, SolverFailure)):
        return EXIT_IO
    if isinstance(exc, BellgateError):
        return EXIT_INVALID
    raise exc


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    if args.command == "inequality" and not args.lambdas:
        args.lambdas = [1.0]
    if getattr(args, "hops", 0) is None:
        from .optimize import SearchConfig
        args.hops = SearchConfig.hops
    ctx = Context(args, argv)
    try:
        code = args.func(ctx)
    except Exception as exc:  # mapped to the exit-code protocol; unknown errors propagate
        code = _exit_code(exc)
        print(f"bellgate: error: {exc}", file=sys.stderr)
    ctx.manifest.exit_code = code
    text = dumps(ctx.manifest.to_dict())
    if args.manifest:
        try:
            Path(args.manifest).write_text(text)
        except OSError as exc:
            print(f"bellgate: error: cannot write manifest: {exc}", file=sys.stderr)
            return EXIT_IO
    else:
        sys.stderr.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
