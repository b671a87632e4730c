"""Command-line interface.

Exit codes: 0 success, 1 other runtime error, 2 configuration or input
error, 3 blow-up, 4 audit or verification failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import RunManifest, load_config
from .errors import AuditFailure, BlowUpError, ConfigError, OutputLockedError
from .harness import (AUDIT_ALPHAS, AUDIT_THETAS, ExperimentSpec, parse_experiment, run_experiment,
                      run_symbol_audit)
from .output import SPECTRAL, dump_snapshot, output_lock, read_snapshot, write_diag_csv, write_snapshot
from .solver import SolverConfig, simulate

EXIT_OK, EXIT_ERROR, EXIT_CONFIG, EXIT_BLOWUP, EXIT_AUDIT = 0, 1, 2, 3, 4
DEFAULT_OUT = "radm_out"

log = logging.getLogger("radm")


def _cmd_run(args) -> int:
    settings = load_config(args.config)
    out_dir = Path(args.out_dir or settings.out_dir)
    cfg = settings.solver
    if not cfg.filter.theory_regime:
        log.warning("theta=%g is below 1/6; running outside the covered regime", cfg.filter.theta)
    with output_lock(out_dir):
        RunManifest.create(settings).write(out_dir / "manifest.json")
        records = []
        try:
            state, _, _ = simulate(cfg, settings.sample_every, on_sample=lambda st, rec: records.append(rec))
        except BlowUpError:
            write_diag_csv(records, out_dir / "diagnostics.csv")
            raise
        write_diag_csv(records, out_dir / "diagnostics.csv")
        if not args.no_snapshot:
            p = cfg.filter
            write_snapshot(state.w, out_dir / "final.snap", t=state.t, alpha=p.alpha,
                           theta=p.theta, deconv_order=p.deconv_order, payload_kind=SPECTRAL)
        for msg in state.warnings:
            log.warning("%s", msg)
    print(f"t={state.t!r} steps={state.step_count} records={len(records)} -> {out_dir}")
    return EXIT_OK


def _print_report(report) -> int:
    for line in report.summary_lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_AUDIT


def _cmd_experiment(args) -> int:
    spec = parse_experiment(Path(args.spec).read_text(encoding="utf-8"))
    if args.output:
        spec = ExperimentSpec(spec.kind, spec.base_config, spec.sweep_values, args.output, spec.options)
    elif spec.output_path is None:
        spec = ExperimentSpec(spec.kind, spec.base_config, spec.sweep_values,
                              str(Path(DEFAULT_OUT) / f"{spec.kind}.csv"), spec.options)
    out_dir = Path(spec.output_path).parent
    with output_lock(out_dir):
        report = run_experiment(spec)
    return _print_report(report)


def _cmd_audit(args) -> int:
    spec = ExperimentSpec(
        "symbol_audit",
        SolverConfig(grid_n=args.grid_n),
        tuple(range(args.n_max + 1)),
        args.output,
        {"alphas": tuple(args.alphas), "thetas": tuple(args.thetas)},
    )
    return _print_report(run_symbol_audit(spec))


def _cmd_snapshot_dump(args) -> int:
    snap = read_snapshot(args.path)
    for line in dump_snapshot(snap, threshold=args.threshold, limit=args.limit):
        print(line)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="radm", description="Rotational deconvolution model solver and harness")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="single solve from a key=value config or JSON manifest")
    run.add_argument("config")
    run.add_argument("--out-dir", help="override out_dir from the config")
    run.add_argument("--no-snapshot", action="store_true", help="skip the final snapshot")
    run.set_defaults(func=_cmd_run)

    exp = sub.add_parser("experiment", help="run a harness experiment file")
    exp.add_argument("spec")
    exp.add_argument("--output", help="CSV path (overrides the file's output key)")
    exp.set_defaults(func=_cmd_experiment)

    audit = sub.add_parser("audit", help="symbol audit over an (alpha, theta, N) lattice")
    audit.add_argument("--grid-n", type=int, default=32)
    audit.add_argument("--n-max", type=int, default=32)
    audit.add_argument("--alphas", type=float, nargs="+", default=list(AUDIT_ALPHAS))
    audit.add_argument("--thetas", type=float, nargs="+", default=list(AUDIT_THETAS))
    audit.add_argument("--output", help="write the slack table as CSV")
    audit.set_defaults(func=_cmd_audit)

    dump = sub.add_parser("snapshot-dump", help="list the modes stored in a snapshot")
    dump.add_argument("path")
    dump.add_argument("--threshold", type=float, default=1e-14, help="hide modes with |c_k| at or below this")
    dump.add_argument("--limit", type=int, default=None, help="maximum number of modes to list")
    dump.set_defaults(func=_cmd_snapshot_dump)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        # FilterParams, WaveGrid and snapshot validation raise ValueError subclasses
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except AuditFailure as exc:
        print(f"audit failure: {exc}", file=sys.stderr)
        return EXIT_AUDIT
    except (OutputLockedError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
