"""Command-line front end.

Subcommands: coeffs, spectral, continuation, solve, audit, sweep.  Every
subcommand accepts ``--config FILE`` (JSON object whose keys are option names
with underscores); explicit flags override config values.

Exit codes: 0 success, 2 configuration error, 3 no bracket, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings

import numpy as np

from . import __version__
from .bvp import ShootingOptions, existence_scan, solve, status_flips
from .errors import DomainError, LeconeError, NoBracketError
from .ode import IntegrationOptions, divergence_residual, profile_from_arrays
from .params import ProblemParams, lambda_of_beta, pohozaev_coeffs, pohozaev_coeffs_factored, q_critical
from .params import beta_critical
from .pohozaev import audit_general_phi, audit_identity
from .spectral import beta_S, beta_S_continuation, lambda_1_beta, lambda_beta
from .sphere import COS_THETA, CONSTANT_ONE, CapGeometry

EXIT_OK, EXIT_CONFIG, EXIT_NO_BRACKET, EXIT_NUMERICAL = 0, 2, 3, 4
WORKERS_ENV = "LECONE_WORKERS"
PROFILE_COLUMNS = ("theta", "omega", "domega")
SWEEP_COLUMNS = ("param", "beta_q", "beta_S", "status", "amplitude", "residual")


class ConfigError(Exception):
    pass


# -- formatting -------------------------------------------------------------------------------------

def _clean(v):
    """JSON-safe value: non-finite floats become strings, numpy scalars become Python."""
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def dumps_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def dumps_csv(columns, rows, config: dict, extra: dict | None = None) -> str:
    buf = io.StringIO()
    buf.write(f"# lecone {__version__}\n")
    buf.write("# config: " + json.dumps(_clean(config), sort_keys=True, allow_nan=False) + "\n")
    for k, v in (extra or {}).items():
        buf.write(f"# {k}: " + json.dumps(_clean(v), sort_keys=True, allow_nan=False) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(x) for x in r])
    return buf.getvalue()


def read_csv(path: str) -> tuple[dict, list[str], list[list[str]]]:
    """Return ``(header_metadata, columns, rows)`` of a file written by this tool."""
    meta, lines = {}, []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition(": ")
                if val:
                    meta[key] = json.loads(val)
                else:
                    meta["version"] = key
            else:
                lines.append(line)
    rows = list(csv.reader(lines))
    return meta, rows[0], rows[1:]


def _emit(text: str, path: str | None):
    if path and path != "-":
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _table(args, columns, rows, extra=None):
    if args.format == "json":
        _emit(dumps_json({"columns": list(columns), "rows": [list(r) for r in rows], **(extra or {})}), args.output)
    else:
        _emit(dumps_csv(columns, rows, _config_of(args), extra), args.output)


def _config_of(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config", "output")}


# -- validation -------------------------------------------------------------------------------------

def _grid(start, stop, num) -> list[float]:
    if num < 0:
        raise ConfigError("range count must be >= 0")
    return np.linspace(start, stop, int(num)).tolist() if num else []


def _geometry(args) -> CapGeometry:
    if args.theta0 is None:
        raise ConfigError("--theta0 is required (radians)")
    return CapGeometry.for_dimension(args.N, args.theta0)


def _params(args, epsilon=None) -> ProblemParams:
    if args.q is None:
        raise ConfigError("--q is required")
    eps = args.epsilon if epsilon is None else epsilon
    if args.beta is None:
        return ProblemParams.separable(args.p, args.q, eps, args.N)
    return ProblemParams(args.p, args.q, eps, args.beta, args.N)


def _shooting(args) -> ShootingOptions:
    if not 0 < args.a_min < args.a_max:
        raise ConfigError("amplitude range needs 0 < a_min < a_max")
    if args.n_scan < 2:
        raise ConfigError("n_scan must be at least 2")
    if not 0 < args.rtol < 1:
        raise ConfigError("rtol must lie in (0, 1)")
    return ShootingOptions(a_min=args.a_min, a_max=args.a_max, n_scan=args.n_scan,
                           integration=IntegrationOptions(rtol=args.rtol))


# -- subcommands ------------------------------------------------------------------------------------

def cmd_coeffs(args) -> int:
    qs = [args.q] if args.q_range is None else _grid(*args.q_range)
    if not qs:
        raise ConfigError("give --q or a non-empty --q-range")
    rows = []
    for q in qs:
        params = ProblemParams.separable(args.p, q, 1, args.N)
        co = pohozaev_coeffs(params)
        fa = pohozaev_coeffs_factored(params.beta, args.p, args.N)
        rows.append((args.p, args.N, q, params.beta, q_critical(args.p, args.N), beta_critical(args.p, args.N),
                     lambda_of_beta(params.beta, args.p, args.N), co.A, co.B, co.C, fa.A, fa.B, fa.C))
    cols = ("p", "N", "q", "beta_q", "q_c", "beta_c", "lambda", "A", "B", "C", "A_factored", "B_factored",
            "C_factored")
    _table(args, cols, rows)
    return EXIT_OK


def cmd_spectral(args) -> int:
    geometry = _geometry(args)
    rows = []
    if args.beta_s:
        r = beta_S(args.p, geometry, args.tol, max_iter=args.max_iter)
        rows.append(("beta_S", args.p, args.N, args.theta0, r.beta, r.value, r.bracket[0], r.bracket[1]))
    for b in args.beta or []:
        r = lambda_beta(b, args.p, geometry, args.tol, max_iter=args.max_iter)
        rows.append(("Lambda_beta", args.p, args.N, args.theta0, b, r.value, r.bracket[0], r.bracket[1]))
    for b in args.lambda1 or []:
        r = lambda_1_beta(b, args.p, geometry, args.n)
        rows.append(("lambda_1_beta", args.p, args.N, args.theta0, b, r.value, None, None))
    if not rows:
        raise ConfigError("nothing to compute: give --beta-s, --beta or --lambda1")
    _table(args, ("kind", "p", "N", "theta0", "beta", "value", "bracket_lo", "bracket_hi"), rows)
    return EXIT_OK


def cmd_continuation(args) -> int:
    geometry = _geometry(args)
    if not args.dp > 0 or args.p_stop < args.p_start:
        raise ConfigError("continuation needs dp > 0 and p_stop >= p_start")
    n = int(round((args.p_stop - args.p_start) / args.dp)) + 1
    ps = args.p_start + args.dp * np.arange(n)
    if np.any(ps <= 1):
        raise ConfigError("continuation needs p > 1")
    table = beta_S_continuation(ps, geometry, args.tol)
    _table(args, ("p", "beta_S"), table.rows(), {"lipschitz": table.lipschitz})
    return EXIT_OK


def _profile_rows(profile, n):
    theta = np.linspace(0.0, profile.theta_end, int(n) + (int(n) % 2) + 1)
    w, dw = profile.sample(theta)
    if profile.termination.kind != "hit_zero":
        w[-1] = profile.omega[-1]
    return list(zip(theta.tolist(), w.tolist(), dw.tolist()))


def _solve(args):
    geometry = _geometry(args)
    params = _params(args)
    opts = _shooting(args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        sol = solve(params, geometry, opts)
    return params, geometry, sol, [str(w.message) for w in caught]


def cmd_solve(args) -> int:
    try:
        params, geometry, sol, notes = _solve(args)
    except NoBracketError as exc:
        _emit(dumps_json({"status": "no_bracket", "message": str(exc)}), args.output)
        return EXIT_NO_BRACKET
    verdict = {"status": "solution_found", "amplitude": sol.amplitude, "miss": sol.miss,
               "brackets": sol.brackets, "unique": sol.unique, "roots": sol.roots,
               "divergence_residual": divergence_residual(sol.profile, relative=True), "warnings": notes,
               "termination": str(sol.profile.termination)}
    if args.profile_out:
        _emit(dumps_csv(PROFILE_COLUMNS, _profile_rows(sol.profile, args.n), _config_of(args)), args.profile_out)
    _emit(dumps_json(verdict), args.output)
    return EXIT_OK


def load_profile(path: str, params: ProblemParams | None = None, geometry: CapGeometry | None = None):
    """Read a profile CSV written by ``solve``; parameters default to its header."""
    meta, cols, rows = read_csv(path)
    if tuple(cols) != PROFILE_COLUMNS:
        raise ConfigError(f"{path}: expected columns {PROFILE_COLUMNS}, got {tuple(cols)}")
    cfg = meta.get("config", {})
    if params is None:
        ns = argparse.Namespace(**cfg)
        params = _params(ns)
    geometry = geometry or CapGeometry.for_dimension(cfg["N"], cfg["theta0"])
    arr = np.array(rows, dtype=float)
    return profile_from_arrays(arr[:, 0], arr[:, 1], arr[:, 2], params, geometry)


def _report_json(rep) -> dict:
    return {"lhs": rep.lhs, "rhs": rep.rhs, "rhs_terms": list(rep.rhs_terms),
            "coeffs": list(rep.coeffs.as_tuple()) if rep.coeffs else None,
            "abs_residual": rep.abs_residual, "rel_residual": rep.rel_residual,
            "scaled_residual": rep.scaled_residual, "grid_size": rep.grid_size, "phi": rep.phi_name}


def cmd_audit(args) -> int:
    if args.profile_in:
        profile = load_profile(args.profile_in)
    else:
        _geometry(args)
        if args.theta0 > math.pi / 2:
            raise ConfigError("audit needs theta0 <= pi/2")
        try:
            _, _, sol, _ = _solve(args)
        except NoBracketError as exc:
            _emit(dumps_json({"status": "no_bracket", "message": str(exc)}), args.output)
            return EXIT_NO_BRACKET
        profile = sol.profile
    if profile.geometry.theta0 > math.pi / 2:
        raise ConfigError("audit needs theta0 <= pi/2")
    if args.phi == "cos":
        rep = audit_identity(profile, grid=args.n)
    else:
        rep = audit_general_phi(profile, CONSTANT_ONE if args.phi == "one" else COS_THETA, grid=args.n)
    _emit(dumps_json({"status": "ok", "amplitude": profile.amplitude, **_report_json(rep)}), args.output)
    return EXIT_OK


def cmd_sweep(args) -> int:
    geometry = _geometry(args)
    opts = _shooting(args)
    if (args.q_range is None) == (args.beta_range is None):
        raise ConfigError("give exactly one of --q-range and --beta-range")
    kind = "q" if args.q_range is not None else "beta"
    values = _grid(*(args.q_range if kind == "q" else args.beta_range))
    workers = args.workers if args.workers is not None else _env_workers()
    verdicts = existence_scan(values, args.p, args.epsilon, args.N, geometry, kind=kind, options=opts,
                              workers=workers)
    rows = [(v.param, v.beta_q, v.beta_S, v.status, v.amplitude, v.residual) for v in verdicts]
    flips = [[verdicts[i].param, verdicts[i + 1].param] for i in status_flips(verdicts)]
    if args.format == "json":
        doc = {"columns": list(SWEEP_COLUMNS), "flips": flips,
               "rows": [dict(zip(SWEEP_COLUMNS, r), message=v.message) for r, v in zip(rows, verdicts)]}
        _emit(dumps_json(doc), args.output)
    else:
        rows = [tuple(None if isinstance(x, float) and math.isnan(x) else x for x in r) for r in rows]
        _emit(dumps_csv(SWEEP_COLUMNS, rows, _config_of(args), {"flips": flips}), args.output)
    return EXIT_OK


def _env_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError(f"{WORKERS_ENV} must be >= 1")
    return n


# -- parser -----------------------------------------------------------------------------------------

def _common(sp, *, problem=False, geometry=True, shooting=False):
    sp.add_argument("--config", help="JSON file with option values; flags override it")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--output", "-o", help="output path (default stdout)")
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--N", type=int, default=3)
    if geometry:
        sp.add_argument("--theta0", type=float, help="cap radius in radians")
    if problem:
        sp.add_argument("--q", type=float)
        sp.add_argument("--epsilon", type=int, choices=(-1, 1), default=1)
        sp.add_argument("--beta", type=float, help="override beta (default beta_q)")
    if shooting:
        sp.add_argument("--a-min", type=float, default=1e-3)
        sp.add_argument("--a-max", type=float, default=1e3)
        sp.add_argument("--n-scan", type=int, default=200)
        sp.add_argument("--rtol", type=float, default=1e-10)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lecone", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("coeffs", help="exponents and identity coefficients")
    _common(sp, geometry=False)
    sp.add_argument("--q", type=float)
    sp.add_argument("--q-range", type=float, nargs=3, metavar=("START", "STOP", "NUM"))
    sp.set_defaults(func=cmd_coeffs)

    sp = sub.add_parser("spectral", help="Lambda_beta, beta_S and lambda_1_beta")
    _common(sp)
    sp.add_argument("--beta-s", action="store_true", help="compute beta_S")
    sp.add_argument("--beta", type=float, nargs="+", help="compute Lambda_beta at these beta")
    sp.add_argument("--lambda1", type=float, nargs="+", metavar="BETA", help="compute lambda_1_beta")
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--n", type=int, default=400, help="elements for lambda_1_beta")
    sp.add_argument("--max-iter", type=int, default=200, help="root refinement iteration cap")
    sp.set_defaults(func=cmd_spectral)

    sp = sub.add_parser("continuation", help="beta_S along a p grid")
    _common(sp)
    sp.add_argument("--p-start", type=float, default=1.5)
    sp.add_argument("--p-stop", type=float, default=3.0)
    sp.add_argument("--dp", type=float, default=0.05)
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.set_defaults(func=cmd_continuation)

    sp = sub.add_parser("solve", help="shoot for a positive profile")
    _common(sp, problem=True, shooting=True)
    sp.add_argument("--profile-out", help="CSV path for (theta, omega, domega)")
    sp.add_argument("--n", type=int, default=2000, help="profile sample intervals")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("audit", help="check the integral identity on a profile")
    _common(sp, problem=True, shooting=True)
    sp.add_argument("--profile-in", help="profile CSV written by solve")
    sp.add_argument("--n", type=int, default=2000, help="quadrature intervals")
    sp.add_argument("--phi", choices=("cos", "cos-general", "one"), default="cos")
    sp.set_defaults(func=cmd_audit)

    sp = sub.add_parser("sweep", help="existence verdicts over q or beta")
    _common(sp, problem=False, shooting=True)
    sp.add_argument("--epsilon", type=int, choices=(-1, 1), default=1)
    sp.add_argument("--q-range", type=float, nargs=3, metavar=("START", "STOP", "NUM"))
    sp.add_argument("--beta-range", type=float, nargs=3, metavar=("START", "STOP", "NUM"))
    sp.add_argument("--workers", type=int, help=f"parallel workers (default ${WORKERS_ENV} or 1)")
    sp.set_defaults(func=cmd_sweep)
    return ap


def _apply_config(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise ConfigError(f"unknown config keys for '{args.command}': {', '.join(unknown)}")
    sub.set_defaults(**cfg)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"lecone: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"lecone: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoBracketError as exc:
        print(f"lecone: no bracket: {exc}", file=sys.stderr)
        return EXIT_NO_BRACKET
    except LeconeError as exc:
        detail = ""
        if getattr(exc, "last_bracket", None) is not None:
            detail = f" (window {exc.window!r}, last bracket {exc.last_bracket!r})"
        print(f"lecone: numerical failure: {type(exc).__name__}: {exc}{detail}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
