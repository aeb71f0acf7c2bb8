"""Command-line front end.

Exit codes: 0 success, 2 usage, 3 numerical failure, 4 validation failure,
5 polynomial-degree claim falsified.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cost_model import (CostSpec, NumericalError, cost_matrix, eigen_residual,
                         expected_cost, optimize_state)
from .estimation import (REPORT_COLUMNS, STATE_KINDS, ExperimentConfig, cost_report,
                         loglog_slope, scaling_sweep, write_csv)
from .simulator import (MAX_QUBITS, GeneralCircuitSpec, PolynomialClaimViolation,
                        fit_amplitude_polynomials, procedure1_as_general_spec,
                        random_general_circuit)
from .states import ProbeState, sine_state, uniform_state

log = logging.getLogger("phaseopt")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_VALIDATION, EXIT_FALSIFIED = 0, 2, 3, 4, 5
EIGEN_TOL = 1e-9


class UsageError(ValueError):
    pass


# -- argument parsing helpers --------------------------------------------------

def parse_cost(text: str) -> CostSpec:
    kind, _, arg = text.partition(":")
    if kind == "fidelity" and not arg:
        return CostSpec.fidelity()
    if kind == "window":
        try:
            delta = float(arg)
        except ValueError:
            raise UsageError(f"bad window width in {text!r}") from None
        return CostSpec.window(delta)
    if kind == "custom" and arg:
        return load_cost_samples(Path(arg))
    raise UsageError(f"cost must be fidelity, window:<delta> or custom:<file>, got {text!r}")


def load_cost_samples(path: Path) -> CostSpec:
    """Uniform-grid ``(phi, C(phi))`` samples from CSV (two columns) or JSON."""
    if path.suffix == ".json":
        data = json.loads(path.read_text())
        phases, values = data["phi"], data["cost"]
    else:
        rows = []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except ValueError:
                    if rows:
                        raise
                    # header line
        phases, values = zip(*rows) if rows else ((), ())
    return CostSpec.from_samples(phases, values, label=path.name)


def parse_n_range(text: str) -> list[int]:
    parts = text.split(":")
    try:
        if len(parts) not in (2, 3):
            raise ValueError
        lo, hi = int(parts[0]), int(parts[1])
        mode = parts[2] if len(parts) == 3 else "1"
        if mode == "geom":
            if lo < 1:
                raise ValueError
            values = []
            n = lo
            while n <= hi:
                values.append(n)
                n *= 2
            if values and values[-1] != hi:
                values.append(hi)
        else:
            step = int(mode)
            if step < 1:
                raise ValueError
            values = list(range(lo, hi + 1, step))
    except ValueError:
        raise UsageError(f"n-range must be a:b[:step|geom] with 0 <= a <= b, got {text!r}") from None
    if not values or lo < 0:
        raise UsageError(f"n-range {text!r} is empty")
    return values


def load_state(text: str, n_oracles: int):
    if text.startswith("file:"):
        state = ProbeState.from_json(Path(text[5:]).read_text())
        if state.n_oracles != n_oracles:
            raise UsageError(f"state file has N={state.n_oracles}, --n is {n_oracles}")
        return state
    if text not in STATE_KINDS:
        raise UsageError(f"state must be one of {STATE_KINDS} or file:<path>")
    return text


# -- output helpers --------------------------------------------------------------

def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_manifest(out: Path, command: str, argv: list[str], config: dict,
                    seed, outputs: list[Path]) -> None:
    manifest = {
        "command": command,
        "argv": list(argv),
        "config": config,
        "tool_version": __version__,
        "master_seed": seed,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "outputs": [str(p) for p in outputs],
    }
    _dump_json(Path(f"{out}.manifest.json"), manifest)


# -- commands ----------------------------------------------------------------------

def cmd_optimize(args, argv) -> int:
    cost = parse_cost(args.cost)
    n = args.n
    if n < 0:
        raise UsageError("--n must be non-negative")
    matrix = cost_matrix(cost, n)
    state, value = optimize_state(matrix)
    resid = eigen_residual(matrix, state, value)
    uniform = expected_cost(uniform_state(n), matrix)
    result = {"cost": cost.name, "n_oracles": n, "min_cost": value, "state": state.to_dict(),
              "eigen_residual": resid, "uniform_cost": uniform, "uniform_gap": uniform - value}
    print(f"optimal expected cost ({cost.name}, N={n}): {value:.12g}")
    print(f"uniform-state cost: {uniform:.12g}  gap: {uniform - value:.6g}")
    if cost.kind == "fidelity":
        closed = float(np.sin(np.pi / (2 * (n + 2))) ** 2)
        state_resid = float(np.linalg.norm(state.amplitudes - sine_state(n).amplitudes))
        result.update(closed_form_cost=closed, closed_form_cost_residual=abs(value - closed),
                      closed_form_state_residual=state_resid)
        print(f"closed form sin^2(pi/(2(N+2))) = {closed:.12g}  "
              f"|cost diff| = {abs(value - closed):.3g}  |state diff| = {state_resid:.3g}")
    if args.out:
        out = Path(args.out)
        _dump_json(out, result)
        _write_manifest(out, "optimize", argv, {"cost": cost.name, "n_oracles": n}, None, [out])
    if resid > EIGEN_TOL:
        print(f"eigen residual {resid:.3g} above {EIGEN_TOL:g}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_simulate(args, argv) -> int:
    cost = parse_cost(args.cost)
    state = load_state(args.state, args.n)
    sampling = "grid" if args.phase_grid else "uniform"
    config = ExperimentConfig(args.n, args.m_grid, cost, state, args.trials, sampling,
                              args.phase_grid, args.seed)
    report = cost_report(config)
    stderr = report.monte_carlo_stderr
    print(f"analytic      {report.analytic_cost:.10g}")
    print(f"semi-analytic {report.semi_analytic_cost:.10g}  "
          f"({'ok' if report.semi_analytic_ok else 'MISMATCH'})")
    print(f"monte carlo   {report.monte_carlo_cost:.10g} +/- "
          f"{'n/a' if stderr is None else f'{stderr:.3g}'}  "
          f"({'ok' if report.monte_carlo_ok else 'DEVIATES'})")
    print(f"oracle calls per trial: {report.oracle_calls_per_trial}")
    if args.out:
        out = Path(args.out)
        csv_path = out.with_suffix(".csv")
        _dump_json(out, {"config": config.to_dict(), "report": report.to_dict()})
        write_csv(csv_path, [report.csv_row()], REPORT_COLUMNS)
        _write_manifest(out, "simulate", argv, config.to_dict(), args.seed, [out, csv_path])
    if not (report.semi_analytic_ok and report.monte_carlo_ok):
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_sweep(args, argv) -> int:
    cost = parse_cost(args.cost)
    n_values = parse_n_range(args.n_range)
    kinds = [k.strip() for k in args.states.split(",") if k.strip()]
    if not kinds or any(k not in STATE_KINDS for k in kinds):
        raise UsageError(f"--states must list kinds from {STATE_KINDS}")
    sweep = scaling_sweep(cost, kinds, n_values)
    rows = [r.as_dict() for r in sweep]
    top = max(n_values)
    slopes = {}
    for kind in kinds:
        try:
            slopes[kind] = loglog_slope(sweep, kind, n_min=top / 10)
        except ValueError:
            slopes[kind] = None
    for kind, slope in slopes.items():
        print(f"{kind:8s} log-log slope over N in [{top / 10:g}, {top}]: "
              f"{'n/a' if slope is None else f'{slope:.4f}'}")
    if args.out:
        out = Path(args.out)
        summary = out.with_suffix(".summary.json")
        write_csv(out, rows)
        _dump_json(summary, {"cost": cost.name, "slopes_top_decade": slopes,
                             "n_values": n_values})
        _write_manifest(out, "sweep", argv, {"cost": cost.name, "states": kinds,
                                             "n_values": n_values}, None, [out, summary])
    return EXIT_OK


def cmd_verify_poly(args, argv) -> int:
    records = []
    if args.spec:
        specs = [GeneralCircuitSpec.from_json(Path(args.spec).read_text())]
        config = {"spec": args.spec}
    else:
        if not 1 <= args.max_qubits <= MAX_QUBITS:
            raise UsageError(f"--max-qubits must be in 1..{MAX_QUBITS}")
        if args.circuits < 1 or args.max_oracles < 0:
            raise UsageError("--circuits must be >= 1 and --max-oracles >= 0")
        specs = []
        for i in range(args.circuits):
            rng = np.random.default_rng([args.seed, i])
            q = int(rng.integers(1, args.max_qubits + 1))
            n = int(rng.integers(0, args.max_oracles + 1))
            specs.append(random_general_circuit(rng, q, n))
        config = {"circuits": args.circuits, "max_oracles": args.max_oracles,
                  "max_qubits": args.max_qubits}
    failures = 0
    for i, spec in enumerate(specs):
        try:
            polys = fit_amplitude_polynomials(spec, seed=args.seed + i)
            residual = max(p.residual for p in polys)
            passed = True
        except PolynomialClaimViolation as exc:
            residual, passed = exc.residual, False
            failures += 1
        records.append({"index": i, "n_qubits": spec.n_qubits, "n_oracles": spec.n_oracles,
                        "max_residual": residual, "passed": passed})
    worst = max(r["max_residual"] for r in records)
    print(f"{len(records)} circuits, worst held-out residual {worst:.3e}, failures {failures}")
    if args.out:
        out = Path(args.out)
        _dump_json(out, {"circuits": records, "max_residual": worst, "tolerance": 1e-9})
        _write_manifest(out, "verify-poly", argv, config, args.seed, [out])
    return EXIT_FALSIFIED if failures else EXIT_OK


def cmd_proc1_spec(args, argv) -> int:
    state = load_state(args.state, args.n)
    if not isinstance(state, ProbeState):
        state = sine_state(args.n) if state == "sine" else uniform_state(args.n)
    spec = procedure1_as_general_spec(state, args.m_grid)
    out = Path(args.out)
    out.write_text(spec.to_json() + "\n")
    _write_manifest(out, "proc1-spec", argv, {"n_oracles": args.n, "m_grid": args.m_grid},
                    None, [out])
    return EXIT_OK


def cmd_rerun(args, argv) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    replay = list(manifest["argv"])
    if args.out:
        if "--out" not in replay:
            raise UsageError("manifest has no --out to redirect")
        replay[replay.index("--out") + 1] = args.out
    return main(replay)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phaseopt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="optimal probe state for a cost")
    p.add_argument("--cost", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("simulate", help="analytic / semi-analytic / Monte Carlo cost report")
    p.add_argument("--state", default="sine")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m-grid", type=int, required=True)
    p.add_argument("--cost", required=True)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--phase-grid", type=int, help="cycle phases over this many grid points")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="expected cost against N")
    p.add_argument("--cost", required=True)
    p.add_argument("--states", default="sine,uniform,optimal")
    p.add_argument("--n-range", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify-poly", help="check amplitudes are degree-N polynomials")
    p.add_argument("--circuits", type=int, default=100)
    p.add_argument("--max-oracles", type=int, default=8)
    p.add_argument("--max-qubits", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spec")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify_poly)

    p = sub.add_parser("proc1-spec", help="write the fixed-form circuit as a general circuit")
    p.add_argument("--state", default="sine")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m-grid", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_proc1_spec)

    p = sub.add_parser("rerun", help="replay a run manifest")
    p.add_argument("manifest")
    p.add_argument("--out", help="redirect the primary output")
    p.set_defaults(func=cmd_rerun)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args, argv)
    except (UsageError, ValueError, FileNotFoundError, KeyError) as exc:
        print(f"phaseopt {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"phaseopt {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
