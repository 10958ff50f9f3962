"""``zeno-steer`` command line.

Exit codes: 0 success, 1 usage / I/O / validation error, 2 a checked
invariant or acceptance criterion failed.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import math
import re
import shlex
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, acceptance, bounds
from . import constants as C
from .ergodic import analytic_phase_sum, lemma1_limit, parse_weight, phase_power_sum
from .errors import InvariantViolation, ScenarioError, ZenoSteerError
from .measure_steer import MEASURE_CSV_HEADER, MonteCarloConfig, run_measurement_study
from .pulse_steer import PULSE_CSV_HEADER, run_pulse_study
from .scenario import load_scenario

EXIT_OK, EXIT_USAGE, EXIT_INVARIANT = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


_POW_RANGE = re.compile(r"^2\^(\d+)\.\.2\^(\d+)$")
_POW = re.compile(r"^2\^(\d+)$")
_PI_EXPR = re.compile(r"^([-+]?(?:\d+(?:\.\d*)?|\.\d+)?)\*?pi(?:/(\d+(?:\.\d*)?))?$")


def parse_steps(text: str) -> list[int]:
    """``16,32,64``; ``2^4`` and ``2^4..2^12`` (powers of two) are accepted too."""
    out: list[int] = []
    for tok in text.replace(" ", "").split(","):
        if not tok:
            continue
        if m := _POW_RANGE.match(tok):
            lo, hi = int(m.group(1)), int(m.group(2))
            if hi < lo:
                raise argparse.ArgumentTypeError(f"empty range {tok!r}")
            out.extend(2**k for k in range(lo, hi + 1))
        elif m := _POW.match(tok):
            out.append(2 ** int(m.group(1)))
        else:
            try:
                out.append(int(tok))
            except ValueError:
                raise argparse.ArgumentTypeError(f"not an integer step count: {tok!r}") from None
    if not out or any(n < 1 for n in out):
        raise argparse.ArgumentTypeError("steps must be a nonempty list of positive integers")
    return out


def parse_phi(text: str) -> float:
    """A float, or a multiple of pi such as ``pi``, ``pi/2``, ``2pi/3``."""
    t = text.replace(" ", "").lower()
    m = _PI_EXPR.match(t)
    if m:
        coef = m.group(1)
        c = 1.0 if coef in ("", "+") else -1.0 if coef == "-" else float(coef)
        return c * math.pi / (float(m.group(2)) if m.group(2) else 1.0)
    try:
        v = float(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a phase: {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"phase must be finite: {text!r}")
    return v


def parse_seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer seed: {text!r}") from None
    if not (0 <= v < 2**64):
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), f".{C.CSV_DIGITS}g")


def _csv_text(header: Sequence[str], rows, comments: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    for c in comments:
        buf.write(f"# {c}\n")
    return buf.getvalue()


def _manifest(argv: Sequence[str], scenario_path=None, scenario_sha=None, seed=None, body: str = "") -> dict:
    return {
        "command": shlex.join(["zeno-steer", *argv]),
        "scenario": None if scenario_path is None else str(scenario_path),
        "scenario_sha256": scenario_sha,
        "seed": seed,
        "schema_version": C.SCHEMA_VERSION,
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "csv_sha256": hashlib.sha256(body.encode()).hexdigest(),
    }


def manifest_path(out: Path) -> Path:
    return out.with_name(out.name + ".manifest.json")


def _emit(body: str, manifest: dict, out: str | None) -> None:
    """Write the CSV and its manifest (``<out>.manifest.json``, or stderr with stdout CSV)."""
    if out is None:
        sys.stdout.write(body)
        sys.stdout.flush()
        print("manifest: " + json.dumps(manifest, sort_keys=True), file=sys.stderr)
        return
    path = Path(out)
    path.write_text(body, encoding="utf-8", newline="")
    manifest_path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _fit_line(label: str, fit) -> str:
    if fit is None:
        return f"fit {label}: none (fewer than 3 values above {C.FIT_FLOOR:g})"
    return f"fit {label}: slope={fit.slope:.6g} intercept={fit.intercept:.6g} r_squared={fit.r_squared:.6g}"


# ----------------------------------------------------------------------------
# commands


def cmd_steer_measure(args, argv) -> int:
    scenario, sha = load_scenario(args.scenario)
    steps = sorted(set(args.steps))
    mc = MonteCarloConfig(args.traj, args.seed) if args.traj > 0 else None
    rows = run_measurement_study(scenario, steps, mc)
    body = _csv_text(MEASURE_CSV_HEADER, [r.csv_fields() for r in rows])
    _emit(body, _manifest(argv, args.scenario, sha, args.seed, body), args.out)
    return EXIT_OK


def cmd_steer_pulse(args, argv) -> int:
    scenario, sha = load_scenario(args.scenario)
    study = run_pulse_study(scenario, sorted(set(args.steps)))
    notes = [_fit_line("one_minus_weight", study.weight_fit), _fit_line("residual_norm", study.residual_fit)]
    if study.non_analytic:
        notes.append(f"schedule {scenario.schedule.kind} is non-analytic; the 1/N residual rate is not guaranteed")
    body = _csv_text(PULSE_CSV_HEADER, [r.csv_fields() for r in study.rows], notes)
    _emit(body, _manifest(argv, args.scenario, sha, None, body), args.out)
    return EXIT_OK


def cmd_bounds(args, argv) -> int:
    g = lambda x: format(x, f".{C.BOUNDS_DIGITS}g")  # noqa: E731
    lam = bounds.required_measurement_rate(args.delta, args.k_norm, args.h_norm, args.tau)
    print(f"lambda = {g(lam)}")
    if lam == 0.0:
        print("K + h = 0: any measurement rate suffices (epsilon = 0)")
        return EXIT_OK
    n = max(1, math.ceil(lam * args.tau))
    eps = bounds.epsilon(bounds.BoundInputs(args.k_norm, args.h_norm, args.tau, n))
    lhs = eps * math.exp(eps)
    print(f"N = ceil(lambda * tau) = {n}")
    print(f"epsilon = {g(eps)}")
    print(f"success bound = {g(bounds.success_bound(eps))}")
    ok = lhs <= args.delta + 1e-9
    print(f"round trip: epsilon * exp(epsilon) = {g(lhs)} {'<=' if ok else '>'} delta = {g(args.delta)}")
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_ergodic(args, argv) -> int:
    steps = sorted(set(args.steps))
    limit = None
    if args.fn is None:
        label = f"k={args.k}"
        try:
            limit = lemma1_limit(args.phi)
        except ZenoSteerError:
            limit = None
        values = [phase_power_sum(args.k, args.phi, n) for n in steps]
    else:
        f = parse_weight(args.fn)
        label = f.label
        values = [analytic_phase_sum(f, args.phi, 0, n - 1, n) for n in steps]
    mags = [abs(v) for v in values]
    rows = [[label, args.phi, n, v.real, v.imag, m, limit] for n, v, m in zip(steps, values, mags)]
    notes = [f"sup magnitude = {max(mags):.12g}"]
    if len(steps) >= 2:
        slope = float(np.polyfit(np.log(steps), mags, 1)[0])
        notes.append(f"growth slope of magnitude vs log N = {slope:.6g}")
    body = _csv_text(["k_or_fn", "phi", "N", "re", "im", "magnitude", "predicted_limit"], rows, notes)
    _emit(body, _manifest(argv, body=body), args.out)
    return EXIT_OK


def cmd_verify(args, argv) -> int:
    directory = Path(args.corpus) if args.corpus else None
    problems = acceptance.corpus_problems(directory)
    if problems:
        for p in problems:
            print(f"corpus: {p}", file=sys.stderr)
        return EXIT_USAGE
    keys = None if args.criteria is None else [k.strip() for k in args.criteria.split(",") if k.strip()]
    results = acceptance.run_suite(keys, acceptance.load_corpus(directory))
    print(acceptance.format_table(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_INVARIANT


# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="zeno-steer", description="Zeno steering simulator and verifier")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    m = sub.add_parser("steer-measure", help="exact and sampled measurement-steering study")
    m.add_argument("--scenario", required=True, help="scenario JSON file")
    m.add_argument("--steps", required=True, type=parse_steps, help="N values, e.g. 16,64 or 2^4..2^10")
    m.add_argument("--traj", type=int, default=0, help="Monte Carlo trajectories per N (0: none)")
    m.add_argument("--seed", type=parse_seed, default=0, help="Monte Carlo seed (uint64)")
    m.add_argument("--out", help="CSV output path (default stdout)")
    m.set_defaults(func=cmd_steer_measure)

    s = sub.add_parser("steer-pulse", help="pulse-steering study with convergence fits")
    s.add_argument("--scenario", required=True)
    s.add_argument("--steps", required=True, type=parse_steps)
    s.add_argument("--out")
    s.set_defaults(func=cmd_steer_pulse)

    b = sub.add_parser("bounds", help="measurement rate needed for success probability 1 - delta")
    b.add_argument("delta", type=float)
    b.add_argument("k_norm", type=float, metavar="K", help="max generator norm")
    b.add_argument("h_norm", type=float, metavar="H", help="noise norm")
    b.add_argument("tau", type=float)
    b.set_defaults(func=cmd_bounds)

    e = sub.add_parser("ergodic", help="weighted phase sums and their large-N behaviour")
    e.add_argument("--phi", required=True, type=parse_phi, help="phase, e.g. 2.1 or 2pi/3")
    g = e.add_mutually_exclusive_group(required=True)
    g.add_argument("--k", type=int, help="power k of the weight (n/N)^k")
    g.add_argument("--fn", help="analytic weight, e.g. x^2, exp:1, sin:3,0, poly:1,0,2, exp:1*x")
    e.add_argument("--steps", type=parse_steps, default=parse_steps("2^8..2^16"))
    e.add_argument("--out")
    e.set_defaults(func=cmd_ergodic)

    v = sub.add_parser("verify", help="run the acceptance suite")
    v.add_argument("--criteria", help="comma-separated subset of criterion keys (default all)")
    v.add_argument("--corpus", help="scenario corpus directory (default: the shipped corpus)")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, argv)
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ScenarioError as exc:
        for path, msg in exc.violations:
            print(f"error: {path}: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except (ZenoSteerError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
