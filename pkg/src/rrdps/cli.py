"""
Command-line front end.

Every subcommand emits a table as CSV (default) or JSON. ``--config FILE``
reads flat ``key = value`` lines; keys are long flag names (dashes or
underscores) and flags given on the command line take precedence.

Exit status: 0 on success, 1 on a computational failure or a detected bound
violation, 2 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from rrdps.attack import attack_metrics, random_attack, verify_bound
from rrdps.bound import BoundMode, BoundQuery, SolverOptions, iae_bound, tolerant_error
from rrdps.decoy import (
    EXPONENTS,
    DecoyEstimationError,
    DecoyIntensities,
    DecoyObservations,
    estimate_single_photon,
    experimental_key_rate,
    recompute_L65_experiment,
)
from rrdps.rates import NU_CAP, VARIANTS, ChannelModel, ProtocolConfig, sweep

ABSENT = "--"
DECOY_COLUMNS = ("Qs", "Es", "Qd", "Ed", "Qv")


class UsageError(Exception):
    """Bad flag values detected after parsing; maps to exit status 2."""


# --------------------------------------------------------------------------
# argument parsing helpers


def _int_list(text: str) -> list[int]:
    try:
        out = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _str_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _loss_grid(text: str) -> list[float]:
    """``start:stop:step`` (inclusive) or a comma-separated list of losses in dB."""
    try:
        if ":" in text:
            start, stop, step = (float(t) for t in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + k * step, 10) for k in range(n)]
        out = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed loss grid {text!r}")
    if not out:
        raise argparse.ArgumentTypeError("loss grid is empty")
    return out


PATH_KEYS = ("input", "output", "scatter")


def read_config(path: str) -> list[tuple[str, str]]:
    """
    Parse ``key = value`` lines; blank lines and ``#`` comments are ignored.

    Relative file paths are resolved against the config file's directory.
    """
    base = Path(path).parent
    pairs = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (t.strip() for t in line.split("=", 1))
        key = key.replace("_", "-")
        if key in PATH_KEYS and not Path(value).is_absolute():
            value = str(base / value)
        pairs.append((key, value))
    return pairs


def _config_argv(parser: argparse.ArgumentParser, pairs) -> list[str]:
    """Turn config pairs into flags for ``parser`` so argparse does the validation."""
    actions = {opt: a for a in parser._actions for opt in a.option_strings}
    argv = []
    for key, value in pairs:
        flag = f"--{key}"
        action = actions.get(flag)
        if action is None:
            raise UsageError(f"unknown config key {key!r}")
        if isinstance(action, argparse._StoreTrueAction):
            if value.lower() in ("1", "true", "yes", "on"):
                argv.append(flag)
            elif value.lower() not in ("0", "false", "no", "off"):
                raise UsageError(f"config key {key!r} expects true or false")
        else:
            argv += [flag, value]
    return argv


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="file of 'key = value' defaults")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", help="write to this file instead of stdout")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--precision", type=int, default=6, help="significant digits in CSV cells")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rrdps", description="RRDPS leakage bounds and key rates")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="leakage bound for one (L, N)")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--N", type=int, default=1)
    p.add_argument("--mode", choices=[m.value for m in BoundMode], default="unconstrained")
    p.add_argument("--error", type=float, help="error rate (constrained mode)")
    p.add_argument("--starts", type=int, default=3)
    _add_common(p)

    p = sub.add_parser("tolerance", help="tolerant error rates for a list of L")
    p.add_argument("--L", type=_int_list, required=True)
    p.add_argument("--N", type=int, default=1)
    p.add_argument("--mode", choices=[m.value for m in BoundMode], help="single column instead of all three")
    p.add_argument("--tol", type=float, default=1e-6)
    _add_common(p)

    p = sub.add_parser("rate-sweep", help="optimised key rate versus loss")
    p.add_argument("--L", type=_int_list, required=True)
    p.add_argument("--losses", type=_loss_grid, required=True, help="start:stop:step or comma list (dB)")
    p.add_argument("--variants", type=_str_list, default=list(VARIANTS))
    p.add_argument("--dark-rate", type=float, default=1e-6)
    p.add_argument("--misalignment", type=float, default=0.015)
    p.add_argument("--ec-efficiency", type=float, default=1.0)
    p.add_argument("--nu-cap", type=int, default=NU_CAP)
    p.add_argument("--mu", type=float, default=0.05, help="used with --no-optimize")
    p.add_argument("--nu-th", type=int, default=1, help="used with --no-optimize")
    p.add_argument("--no-optimize", action="store_true")
    _add_common(p)

    p = sub.add_parser("decoy", help="decoy-state estimates and experimental key rates")
    p.add_argument("--input", required=True, help="CSV with columns Qs,Es,Qd,Ed,Qv")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--mu-signal", type=float, required=True)
    p.add_argument("--mu-decoy", type=float, required=True)
    p.add_argument("--mu-vacuum", type=float, required=True)
    p.add_argument("--ec-efficiency", type=float, default=1.0)
    p.add_argument("--exponent", choices=EXPONENTS, default="packet")
    _add_common(p)

    p = sub.add_parser("oracle-verify", help="Monte Carlo check of the single-photon bound")
    p.add_argument("--L", type=_int_list, required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--scatter", help="CSV file for the (E, I) scatter")
    _add_common(p)

    p = sub.add_parser("recompute-l65", help="rates for the reported L=65 experiment")
    _add_common(p)
    return parser


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config and known.command in COMMANDS:
        sub = parser._subparsers._group_actions[0].choices[known.command]
        head = _config_argv(sub, read_config(known.config))
        idx = list(argv).index(known.command)
        argv = [*argv[: idx + 1], *head, *argv[idx + 1 :]]
    return parser.parse_args(argv)


# --------------------------------------------------------------------------
# output


def _cell(value, precision: int) -> str:
    if value is None:
        return ABSENT
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.{precision}g}"
    if isinstance(value, (list, tuple)):
        return ";".join(_cell(v, precision) for v in value)
    return str(value)


def render(rows: list[dict], columns: Sequence[str], fmt: str, precision: int) -> str:
    if fmt == "json":
        return json.dumps([{k: r.get(k) for k in columns} for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(k), precision) for k in columns])
    return buf.getvalue()


def _emit(args, rows, columns):
    text = render(rows, columns, args.format, args.precision)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# subcommands


def cmd_bound(args) -> int:
    try:
        query = BoundQuery(args.L, args.N, args.mode, args.error)
    except ValueError as exc:
        raise UsageError(str(exc))
    res = iae_bound(query, SolverOptions(starts=args.starts, seed=args.seed))
    row = {
        "L": args.L,
        "N": args.N,
        "mode": query.mode.value,
        "E": query.error_rate,
        "iae": res.iae,
        "argmax": [float(v) for v in res.argmax],
        "converged": res.converged,
    }
    _emit(args, [row], ["L", "N", "mode", "E", "iae", "argmax", "converged"])
    return 0 if res.converged else 1


def cmd_tolerance(args) -> int:
    for L in args.L:
        if L < args.N + 2:
            raise UsageError(f"tolerance needs L >= N + 2 for a positive rate (got L={L}, N={args.N})")
    modes = [BoundMode(args.mode)] if args.mode else list(BoundMode)
    rows = []
    for L in args.L:
        row = {"L": L, "N": args.N}
        for m in modes:
            row[m.value] = tolerant_error(L, args.N, m, tol=args.tol)
        rows.append(row)
    _emit(args, rows, ["L", "N", *(m.value for m in modes)])
    return 0


def cmd_rate_sweep(args) -> int:
    bad = [v for v in args.variants if v not in VARIANTS]
    if bad:
        raise UsageError(f"unknown variants {bad}; choose from {list(VARIANTS)}")
    try:
        channel = ChannelModel(0.0, args.dark_rate, args.misalignment)
        cfgs = [ProtocolConfig(L, args.mu, args.nu_th, args.ec_efficiency) for L in args.L]
    except ValueError as exc:
        raise UsageError(str(exc))
    rows = []
    for cfg in cfgs:
        for pt in sweep(channel, cfg, args.losses, args.variants, not args.no_optimize, args.nu_cap):
            rows.append(
                {
                    "loss_db": pt.loss_db,
                    "variant": pt.variant,
                    "L": cfg.L,
                    "R": pt.key_rate_R,
                    "mu_opt": pt.optimal_mu,
                    "nu_th_opt": pt.optimal_nu_th,
                    "Q": pt.gain_Q,
                    "E": pt.error_E,
                }
            )
    _emit(args, rows, ["loss_db", "variant", "L", "R", "mu_opt", "nu_th_opt", "Q", "E"])
    return 0


def cmd_decoy(args) -> int:
    try:
        intens = DecoyIntensities(args.mu_signal, args.mu_decoy, args.mu_vacuum, args.L)
    except ValueError as exc:
        raise UsageError(str(exc))
    try:
        with open(args.input, newline="") as fh:
            reader = csv.DictReader(fh)
            header = [h.strip() for h in (reader.fieldnames or [])]
            records = [{k.strip(): v for k, v in rec.items()} for rec in reader]
    except OSError as exc:
        raise UsageError(str(exc))
    missing = [c for c in DECOY_COLUMNS if c not in header]
    if missing:
        raise UsageError(f"input is missing columns {missing}")
    extra = [h for h in header if h not in DECOY_COLUMNS]
    rows, status = [], 0
    for rec in records:
        row = {k: rec[k] for k in extra}
        try:
            obs = DecoyObservations(*(float(rec[c]) for c in DECOY_COLUMNS))
        except ValueError as exc:
            raise UsageError(f"bad observation row {rec}: {exc}")
        try:
            est = estimate_single_photon(intens, obs, args.exponent)
        except DecoyEstimationError as exc:
            print(f"estimation failed for {rec}: {exc}", file=sys.stderr)
            status = 1
            rows.append(row)
            continue
        row.update(
            Y0=est.Y0,
            Y1=est.Y1,
            E1=est.E1,
            E1_clipped=est.clipped,
            R1=experimental_key_rate(intens, obs, est, "R1", args.ec_efficiency),
            R2=experimental_key_rate(intens, obs, est, "R2", args.ec_efficiency),
        )
        rows.append(row)
    _emit(args, rows, [*extra, "Y0", "Y1", "E1", "E1_clipped", "R1", "R2"])
    return status


def cmd_oracle_verify(args) -> int:
    if any(L < 2 for L in args.L):
        raise UsageError("L must be >= 2")
    if args.trials < 0:
        raise UsageError("trials must be non-negative")
    rows, scatter, violations = [], [], 0
    for L in args.L:
        rng = np.random.default_rng([args.seed, L])
        worst, bad = None, 0
        for _ in range(args.trials):
            spec = random_attack(rng, L)
            rep = verify_bound(spec, attack_metrics(spec))
            bad += not rep.ok
            worst = rep.bound_slack if worst is None else min(worst, rep.bound_slack)
            scatter.append({"L": L, "E": rep.aggregate_E, "I": rep.aggregate_I, "bound": rep.bound})
        violations += bad
        rows.append({"L": L, "trials": args.trials, "seed": args.seed, "violations": bad, "worst_slack": worst})
    if args.scatter:
        Path(args.scatter).write_text(render(scatter, ["L", "E", "I", "bound"], "csv", 17))
    _emit(args, rows, ["L", "trials", "seed", "violations", "worst_slack"])
    return 1 if violations else 0


def cmd_recompute_l65(args) -> int:
    res = recompute_L65_experiment()
    _emit(args, [res._asdict()], list(res._fields))
    return 0


COMMANDS = {
    "bound": cmd_bound,
    "tolerance": cmd_tolerance,
    "rate-sweep": cmd_rate_sweep,
    "decoy": cmd_decoy,
    "oracle-verify": cmd_oracle_verify,
    "recompute-l65": cmd_recompute_l65,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    except (UsageError, OSError) as exc:
        print(f"rrdps: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
