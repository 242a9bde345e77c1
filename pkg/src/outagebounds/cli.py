"""Command-line front end.

Subcommands::

    bounds   epsilon sweep of worst / best / iid / comonotonic outage rates
    cmin     c_n(a) sweep for one or more n
    csit     zero-outage rates with transmitter CSI over an n sweep
    verify   analytic bounds against the rearrangement and Monte Carlo oracles

Every flag can also come from a ``key = value`` file given with ``--config``;
command-line flags win. Exit codes: 0 ok, 1 usage, 2 numeric failure,
3 verification tolerance exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import capacity, csit, depbounds, numerics, oracle
from .errors import (
    ConvergenceError,
    DivergenceError,
    DomainError,
    OutageBoundsError,
    UnsupportedDistributionError,
)
from .marginals import ExponentialMarginal, Marginal, parse_marginal_spec

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_TOLERANCE = 0, 1, 2, 3
DEFAULT_N = "5"

PRESETS = {
    "fig1": {"command": "cmin", "marginal": "exp:1", "n": "3,5,10", "a_grid": "0:0.99:100"},
    "fig2": {"command": "bounds", "marginal": "exp:1", "n": "5", "rho_db": 5.0,
             "eps_grid": "0.001:0.999:50"},
    "fig3": {"command": "csit", "marginal": "exp:1", "n": "2-10", "rho_db": 5.0},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------------------- #
# value formatting / CSV round trip
# --------------------------------------------------------------------------- #

def format_value(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def parse_value(text: str):
    if text == "NA":
        return None
    if text in ("true", "false"):
        return text == "true"
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def rows_to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    fields = list(rows[0])
    writer.writerow(fields)
    for row in rows:
        writer.writerow([format_value(row[k]) for k in fields])
    return buf.getvalue()


def csv_to_rows(text: str) -> list[dict]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        return []
    return [dict(zip(header, map(parse_value, rec))) for rec in reader]


def _json_value(v):
    if isinstance(v, (float, np.floating)):
        v = float(f"{float(v):.12g}")
        return None if not math.isfinite(v) else v
    if isinstance(v, np.integer):
        return int(v)
    return v


def rows_to_json(rows: list[dict]) -> str:
    return json.dumps([{k: _json_value(v) for k, v in row.items()} for row in rows], indent=1) + "\n"


# --------------------------------------------------------------------------- #
# argument helpers
# --------------------------------------------------------------------------- #

def parse_grid(text: str) -> list[float]:
    """``START:STOP:COUNT`` (inclusive linspace) or a comma list."""
    text = str(text).strip()
    if ":" in text:
        try:
            start, stop, count = text.split(":")
            start, stop, count = float(start), float(stop), int(count)
        except ValueError:
            raise UsageError(f"bad grid {text!r}; expected START:STOP:COUNT") from None
        if count < 1:
            raise UsageError("grid count must be >= 1")
        return [float(x) for x in np.linspace(start, stop, count)]
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad value list {text!r}") from None


def parse_int_list(text: str) -> list[int]:
    """``3,5,10`` or ranges such as ``2-8``."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if "-" in part:
                lo, hi = part.split("-")
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise UsageError(f"bad integer list {text!r}") from None
    if not out:
        raise UsageError("empty n list")
    return out


def read_config(path) -> dict:
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.lstrip("-").replace("-", "_")] = value
    return values


def _rho(args) -> float:
    if args.rho is not None and args.rho_db is not None:
        raise UsageError("give either --rho or --rho-db, not both")
    if args.rho is not None:
        return float(args.rho)
    db = 5.0 if args.rho_db is None else float(args.rho_db)
    return 10.0 ** (db / 10.0)


def _marginals(args):
    try:
        m = parse_marginal_spec(args.marginal)
    except (DomainError, OSError) as exc:
        raise UsageError(f"invalid marginal spec {args.marginal!r}: {exc}") from None
    if isinstance(m, list) and args.normalize_sum:
        total = sum(1.0 / mi.rate for mi in m)
        m = [ExponentialMarginal(mi.rate * total / len(m)) for mi in m]
    return m


def _n_values(args) -> list[int]:
    return parse_int_list(DEFAULT_N if args.n is None else args.n)


def _link_count(m, args) -> list[int]:
    if isinstance(m, list):
        if args.n is not None and parse_int_list(args.n) != [len(m)]:
            raise UsageError(f"--n {args.n} does not match the {len(m)} listed marginals")
        return [len(m)]
    return _n_values(args)


# --------------------------------------------------------------------------- #
# commands
# --------------------------------------------------------------------------- #

def cmd_bounds(args) -> tuple[list[dict], int]:
    rho = _rho(args)
    eps_values = parse_grid(args.eps_grid) if args.eps_grid else parse_grid(args.eps)
    m = _marginals(args)
    rows = []
    for n in _link_count(m, args):
        for eps in eps_values:
            cfg = capacity.SystemConfig(n, rho, eps)
            rep = capacity.bound_report(m, cfg)
            rows.append({"n": n, "rho": rho, "eps": eps, "worst": rep.worst, "best": rep.best,
                         "iid": rep.iid, "comonotonic": rep.comonotonic,
                         "phi_best": rep.phi_best, "phi_worst": rep.phi_worst})
    return rows, EXIT_OK


def cmd_cmin(args) -> tuple[list[dict], int]:
    a_values = parse_grid(args.a_grid) if args.a_grid else parse_grid(args.a)
    m = _marginals(args)
    if isinstance(m, list):
        raise UsageError("cmin needs a single (homogeneous) marginal")
    target = m.negate() if args.negated else m
    rows = []
    for n in _n_values(args):
        for a in a_values:
            sol = depbounds.c_min(target, n, a)
            rows.append({"n": n, "a": a, "c": sol.c, "branch": sol.branch.value,
                         "residual": sol.residual})
    return rows, EXIT_OK


def cmd_csit(args) -> tuple[list[dict], int]:
    rho = _rho(args)
    m = _marginals(args)
    if isinstance(m, list):
        raise UsageError("csit needs a single (homogeneous) marginal")
    rows = []
    for n in _n_values(args):
        rep = csit.csit_report(m, n, rho)
        nocsit = capacity.zero_outage_best(m, rho, n)
        rows.append({"n": n, "rho": rho, "csit_best": rep.best, "csit_iid": rep.iid,
                     "csit_worst": rep.worst, "nocsit_best": nocsit, "gap": rep.best - nocsit})
    return rows, EXIT_OK


def _rel(est: float, ref: float) -> float:
    return abs(est - ref) / abs(ref) if ref != 0 else abs(est - ref)


def cmd_verify(args) -> tuple[list[dict], int]:
    eps = float(args.eps)
    if not 0.0 < eps < 1.0:
        raise UsageError("verify needs 0 < eps < 1")
    tol = float(args.tolerance)
    N, seed, samples = int(args.oracle_n), int(args.seed), int(args.samples)
    m = _marginals(args)
    rows = []
    homogeneous = isinstance(m, Marginal)
    for n in _link_count(m, args):
        links = [m] * n if homogeneous else m
        cfg = capacity.SystemConfig(n, 1.0, eps)
        best = capacity.best_gain(m, cfg)
        worst = capacity.worst_gain(m, cfg)
        ra_hi = oracle.ra_extremal_quantile(links, eps, N, oracle.Mode.MAX_QUANTILE, seed)
        ra_lo = oracle.ra_extremal_quantile(links, eps, N, oracle.Mode.MIN_QUANTILE, seed)
        for name, ref, ra, sign in (("best_quantile", best, ra_hi, 1), ("worst_quantile", worst, ra_lo, -1)):
            err = _rel(ra.extremal_sum, ref)
            # heterogeneous references are bounds, not attained values
            ok = err <= tol if homogeneous else sign * (ra.extremal_sum - ref) <= tol * abs(ref)
            rows.append({"n": n, "quantity": name, "eps": eps, "threshold": None, "analytic": ref,
                         "estimate": ra.extremal_sum, "rel_error": err, "z_score": None,
                         "converged": ra.converged, "ok": bool(ok)})
        lam = capacity.common_exponential_rate(m)
        if lam is not None:
            for k, q in enumerate((0.1, 0.3, 0.5, 0.7, 0.9)):
                s = numerics.inv_reg_lower_gamma(n, q) / lam
                ref = numerics.reg_lower_gamma(n, lam * s)
                mc = oracle.mc_outage(links, s, oracle.Coupling.IID, samples, seed + k)
                z = (mc.value - ref) / mc.std_error if mc.std_error > 0 else 0.0
                rows.append({"n": n, "quantity": "iid_outage", "eps": eps, "threshold": s, "analytic": ref,
                             "estimate": mc.value, "rel_error": _rel(mc.value, ref), "z_score": z,
                             "converged": True, "ok": abs(z) <= 3.0})
    if not all(r["converged"] for r in rows):
        return rows, EXIT_NUMERIC
    if not all(r["ok"] for r in rows):
        return rows, EXIT_TOLERANCE
    return rows, EXIT_OK


COMMANDS = {"bounds": cmd_bounds, "cmin": cmd_cmin, "csit": cmd_csit, "verify": cmd_verify}


# --------------------------------------------------------------------------- #
# parser
# --------------------------------------------------------------------------- #

def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key = value file mirroring the flags")
    p.add_argument("--preset", choices=sorted(PRESETS), help="pin a figure's parameters")
    p.add_argument("--marginal", default="exp:1",
                   help="exp:LAMBDA[,LAMBDA...] | uniform[:LOW,HIGH] | table:PATH")
    p.add_argument("--n", default=None,
                   help=f"link count(s), e.g. 5 or 3,5,10 or 2-8 (default {DEFAULT_N}; "
                        "inferred from a marginal list)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", help="write to this path instead of stdout")


def _snr(p: argparse.ArgumentParser):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--rho-db", type=float, default=None, help="SNR in dB (default 5)")
    g.add_argument("--rho", type=float, default=None, help="linear SNR")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="outagebounds", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("bounds", help="epsilon sweep of the outage-rate bounds")
    _common(p)
    _snr(p)
    p.add_argument("--eps", default="0.01", help="single epsilon or comma list")
    p.add_argument("--eps-grid", help="START:STOP:COUNT")
    p.add_argument("--normalize-sum", action="store_true",
                   help="rescale exponential rates so sum of means equals n")

    p = sub.add_parser("cmin", help="c_n(a) sweep")
    _common(p)
    p.add_argument("--a", default="0", help="single a or comma list")
    p.add_argument("--a-grid", help="START:STOP:COUNT")
    p.add_argument("--negated", action="store_true", help="use the negated gain (c^-_n)")

    p = sub.add_parser("csit", help="zero-outage rates with transmitter CSI")
    _common(p)
    _snr(p)

    p = sub.add_parser("verify", help="oracle cross-check of the analytic bounds")
    _common(p)
    p.add_argument("--eps", default="0.1")
    p.add_argument("--oracle-n", type=int, default=2000, help="rearrangement rows N")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--tolerance", type=float, default=0.02, help="max relative error")
    p.add_argument("--normalize-sum", action="store_true")

    for sp in sub.choices.values():
        sp.set_defaults(normalize_sum=False, negated=False)
    return parser


def _apply_file_defaults(parser, argv):
    """Preset < config file < command line."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    pre.add_argument("--preset")
    known, _ = pre.parse_known_args(argv)
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    target = sub.choices.get(known.command)
    if target is None:
        return
    defaults = {}
    if known.preset:
        preset = PRESETS.get(known.preset)
        if preset is None:
            return
        if preset["command"] != known.command:
            raise UsageError(f"preset {known.preset} belongs to the {preset['command']!r} command")
        defaults.update({k: v for k, v in preset.items() if k != "command"})
    if known.config:
        try:
            defaults.update(read_config(known.config))
        except OSError as exc:
            raise UsageError(str(exc)) from None
    valid = {a.dest for a in target._actions}
    unknown = set(defaults) - valid
    if unknown:
        raise UsageError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    for action in target._actions:
        if action.dest in defaults and isinstance(action, argparse._StoreTrueAction):
            defaults[action.dest] = str(defaults[action.dest]).lower() in ("1", "true", "yes", "on")
        elif action.dest in defaults and action.type is not None and isinstance(defaults[action.dest], str):
            defaults[action.dest] = action.type(defaults[action.dest])
    target.set_defaults(**defaults)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_file_defaults(parser, argv)
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"outagebounds: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        # argparse exits on --help and on usage errors
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        rows, code = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"outagebounds: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, DivergenceError) as exc:
        print(f"outagebounds: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DomainError, UnsupportedDistributionError, ValueError) as exc:
        print(f"outagebounds: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OutageBoundsError as exc:
        print(f"outagebounds: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    text = rows_to_json(rows) if args.format == "json" else rows_to_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
