"""Command line front end.

Subcommands: identities, sample, free-energy, cycles, clt, tilted, approx,
decomposition, report.  Reports are emitted as JSON (stable key order,
schema_version 1) to --out or standard output; --format csv additionally
dumps raw samples, one row per replicate.

Exit codes: 0 success with all verdicts passing, 2 verdict failure,
1 usage, regime or budget errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from datetime import datetime, timezone

from . import experiments, gibbs, randmat
from .experiments import ExperimentConfig, ExperimentReport
from .gibbs import ModelParams

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERDICT = 2


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is exit 1."""

    def __init__(self, *args, **kwargs):
        kwargs.setdefault("formatter_class", argparse.ArgumentDefaultsHelpFormatter)
        super().__init__(*args, **kwargs)

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _add_model_flags(p, need_beta=True):
    p.add_argument("--n", type=int, required=True, help="system size")
    p.add_argument("--beta", type=float, required=need_beta, default=0.0,
                   help="inverse temperature")
    p.add_argument("--J", type=float, default=0.0, help="uniform coupling")
    p.add_argument("--Jprime", type=float, default=0.0, help="diagonal coupling")


def _add_run_flags(p):
    p.add_argument("--reps", type=int, default=1000, help="Monte Carlo replicates")
    p.add_argument("--seed", type=int, default=1, help="master seed")
    p.add_argument("--n-grid", type=str, default=None,
                   help="comma-separated sizes for trend checks, e.g. 12,16,20")
    p.add_argument("--threads", type=int, default=1, help="parallel workers")
    p.add_argument("--out", type=str, default=None, help="report path (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json",
                   help="csv additionally dumps raw samples next to the report")
    p.add_argument("--raw-samples", action="store_true",
                   help="keep per-replicate samples in the report")
    p.add_argument("--budget", type=float, default=None,
                   help="override the cycle enumeration budget (operation count)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="skcw", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("identities", parents=[], help="run the exact identity suite")
    p.add_argument("--max-k", type=int, default=30,
                   help="largest k for the cancellation identity")
    p.add_argument("--out", type=str, default=None)

    p = sub.add_parser("sample", help="sample a coupling matrix, text format")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--hollow", action="store_true", help="zero diagonal")
    p.add_argument("--out", type=str, default=None)

    p = sub.add_parser("free-energy", help="one exact evaluation of log Z and F_n")
    _add_model_flags(p)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--out", type=str, default=None)

    p = sub.add_parser("clt", help="free-energy fluctuation experiment")
    _add_model_flags(p)
    _add_run_flags(p)

    p = sub.add_parser("cycles", help="signed-cycle statistics under the null law")
    _add_model_flags(p, need_beta=False)
    _add_run_flags(p)
    p.add_argument("--kmax", type=int, default=4, help="largest cycle length")

    p = sub.add_parser("tilted", help="signed-cycle statistics under the tilt")
    _add_model_flags(p)
    _add_run_flags(p)
    p.add_argument("--kmax", type=int, default=3)
    p.add_argument("--sigma", choices=("ones", "alternating", "random"),
                   default="ones", help="spin vector defining the tilt")

    p = sub.add_parser("approx", help="cycle vs spectral-statistic residuals")
    _add_model_flags(p, need_beta=False)
    _add_run_flags(p)
    p.add_argument("--kmax", type=int, default=5)
    p.add_argument("--centering-reps", type=int, default=None,
                   help="replicates for the independent centering estimate")

    p = sub.add_parser("decomposition", help="cycle decomposition of log Z")
    _add_model_flags(p)
    _add_run_flags(p)
    p.add_argument("--m", type=int, default=4, help="cycle truncation depth")

    p = sub.add_parser("report", help="re-parse, validate and summarize a report")
    p.add_argument("--in", dest="path", type=str, required=True)
    return parser


def _parse_grid(text):
    if not text:
        return None
    try:
        return tuple(int(tok) for tok in text.split(","))
    except ValueError as exc:
        raise ValueError(f"bad --n-grid {text!r}: {exc}") from None


def _emit(payload: dict, out: str | None) -> None:
    payload = dict(payload)
    payload["generated_at"] = datetime.now(timezone.utc).isoformat()
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_raw_csv(report: ExperimentReport, out: str | None) -> None:
    if not report.raw_samples:
        raise ValueError("--format csv needs --raw-samples")
    path = (out + ".csv") if out else None
    fh = open(path, "w", newline="", encoding="utf-8") if path else sys.stdout
    try:
        names = sorted({k for per_n in report.raw_samples.values() for k in per_n})
        writer = csv.writer(fh)
        writer.writerow(["n", "replicate"] + names)
        for n_str, per_n in report.raw_samples.items():
            count = len(next(iter(per_n.values())))
            for r in range(count):
                writer.writerow(
                    [n_str, r] + [per_n[name][r] if name in per_n else "" for name in names]
                )
    finally:
        if path:
            fh.close()


def _report_exit(report: ExperimentReport, args) -> int:
    _emit(report.to_dict(), getattr(args, "out", None))
    if getattr(args, "format", "json") == "csv":
        _emit_raw_csv(report, args.out)
    return EXIT_OK if report.passed else EXIT_VERDICT


def _make_config(args, kind, kmax=None, m=4, centering=None) -> ExperimentConfig:
    params = ModelParams(beta=args.beta, J=args.J, Jprime=args.Jprime, n=args.n)
    if kind in ("clt", "decomposition"):
        params.require_paramagnetic()
    kwargs = {}
    if args.budget is not None:
        kwargs["cycle_budget"] = args.budget
    return ExperimentConfig(
        kind=kind,
        params=params,
        replicates=args.reps,
        master_seed=args.seed,
        kmax=kmax if kmax is not None else 4,
        m=m,
        n_grid=_parse_grid(args.n_grid),
        threads=args.threads,
        keep_raw=args.raw_samples or args.format == "csv",
        centering_replicates=centering,
        **kwargs,
    )


def _cmd_identities(args) -> int:
    report = experiments.run_identities(args.max_k)
    _emit(report.to_dict(), args.out)
    return EXIT_OK if report.passed else EXIT_VERDICT


def _cmd_sample(args) -> int:
    a = randmat.sample_gaussian_matrix(
        args.n, randmat.SeedSpec(args.seed, args.stream), hollow=args.hollow
    )
    if args.out:
        randmat.save_matrix_text(a, args.out)
    else:
        randmat.save_matrix_text(a, sys.stdout)
    return EXIT_OK


def _cmd_free_energy(args) -> int:
    params = ModelParams(beta=args.beta, J=args.J, Jprime=args.Jprime, n=args.n)
    a = randmat.sample_gaussian_matrix(args.n, randmat.SeedSpec(args.seed, args.stream))
    log_z = gibbs.exact_log_partition(a, params)
    payload = {
        "schema_version": experiments.SCHEMA_VERSION,
        "kind": "free-energy",
        "config": {"n": args.n, "beta": args.beta, "J": args.J,
                   "Jprime": args.Jprime, "seed": args.seed, "stream": args.stream},
        "log_partition": log_z,
        "free_energy": log_z / args.n,
        "n_fluct": log_z - args.n * args.beta**2,
    }
    if params.paramagnetic and args.beta > 0:
        t = gibbs.clt_targets(params)
        payload["targets"] = {"limit": t.limit, "mean": t.mean, "variance": t.variance}
    _emit(payload, args.out)
    return EXIT_OK


def _cmd_report(args) -> int:
    with open(args.path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    data.pop("generated_at", None)
    report = ExperimentReport.from_dict(data)
    lines = [f"kind: {report.kind}", f"passed: {report.passed}"]
    for res in report.results:
        for c in res.checks:
            lines.append(f"  n={res.n} {'PASS' if c.passed else 'FAIL'} {c.name}: "
                         f"observed={c.observed!r} target={c.target!r} "
                         f"tolerance={c.tolerance!r}")
    for c in report.checks:
        lines.append(f"  {'PASS' if c.passed else 'FAIL'} {c.name}: "
                     f"observed={c.observed!r}")
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK if report.passed else EXIT_VERDICT


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "identities":
            return _cmd_identities(args)
        if args.command == "sample":
            return _cmd_sample(args)
        if args.command == "free-energy":
            return _cmd_free_energy(args)
        if args.command == "clt":
            return _report_exit(experiments.run_clt(_make_config(args, "clt")), args)
        if args.command == "cycles":
            cfg = _make_config(args, "cycles", kmax=args.kmax)
            return _report_exit(experiments.run_cycles(cfg), args)
        if args.command == "tilted":
            cfg = _make_config(args, "tilted", kmax=args.kmax)
            sigma = {
                "ones": randmat.all_ones_spins(args.n),
                "alternating": randmat.alternating_spins(args.n),
                "random": randmat.random_spins(
                    args.n, randmat.SeedSpec(args.seed).derived(0x5160)
                ),
            }[args.sigma]
            return _report_exit(experiments.run_tilted(cfg, sigma), args)
        if args.command == "approx":
            cfg = _make_config(args, "approx", kmax=args.kmax,
                               centering=args.centering_reps)
            return _report_exit(experiments.run_approx(cfg), args)
        if args.command == "decomposition":
            cfg = _make_config(args, "decomposition", m=args.m)
            return _report_exit(experiments.run_decomposition(cfg), args)
        if args.command == "report":
            return _cmd_report(args)
        parser.error(f"unknown command {args.command!r}")
    except (ValueError, OverflowError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
