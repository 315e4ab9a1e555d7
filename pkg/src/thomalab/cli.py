"""Command-line front end.

Exit codes: 0 all checks passed, 1 a check failed, 2 bad input, 3 runtime abort.
Settings come from (highest first) flags, THOMA_SEED for the seed, the TOML
file given by --config ([params], [grid], [sim]), then built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

from . import __version__
from .checks import DEFAULT_GRID, LIMITS, UnknownLimit, limit_sweep
from .identities import IDENTITIES, Ranges, UnknownIdentity, verify_identity
from .operators import (
    DegenerationError, apply_A, apply_A_nat, apply_A_petrov, degenerate_to_petrov, gamma,
    gamma_alpha_beta, gamma_NM,
)
from .parser import ParseError, parse_poly
from .poly import ExtPoly, MomentPoly, NatPoly, PolyError
from .printing import to_grouped, to_text
from .thoma import (
    NumParams, PointError, PreconditionError, a_chi_num, chi, eval_q, gamma_C_num,
    gamma_CD_num, make_point, nat_limit_alpha1, point_from_json,
)

SCHEMA = "thoma-report/1"
EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_ABORT = 0, 1, 2, 3


class InputError(ValueError):
    """Bad user input; maps to exit code 2."""


class RuntimeAbort(RuntimeError):
    """Computation aborted; maps to exit code 3."""


# -- configuration --------------------------------------------------------------------

def _load_toml(path: str | None) -> dict:
    if not path:
        return {}
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise InputError(f"invalid TOML in {path}: {exc}") from None
    unknown = set(data) - {"params", "grid", "sim"}
    if unknown:
        raise InputError(f"unknown config sections: {sorted(unknown)}")
    return data


def _pick(flag, section: dict, key: str, default=None):
    return flag if flag is not None else section.get(key, default)


def _seed(flag, section: dict) -> int:
    if flag is not None:
        seed = flag
    elif os.environ.get("THOMA_SEED"):
        try:
            seed = int(os.environ["THOMA_SEED"])
        except ValueError:
            raise InputError("THOMA_SEED must be an integer") from None
    else:
        seed = section.get("seed", 0)
    if not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise InputError("seed must be an integer in [0, 2^64)")
    return seed


def _param_value(text, name: str):
    """'sym' keeps the parameter symbolic; anything else must be a rational."""
    if text is None or (isinstance(text, str) and text.strip() == "sym"):
        return None
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError):
        raise InputError(f"{name} must be 'sym' or a rational, got {text!r}") from None


def _symbolic_params(args, cfg) -> dict:
    sec = cfg.get("params", {})
    out = {}
    for name in ("theta", "s1", "s2", "pa", "ptau"):
        v = _param_value(_pick(getattr(args, name, None), sec, name), name)
        if v is not None:
            if name == "theta" and v <= 0:
                raise InputError("theta must be positive")
            out[name] = v
    return out


def _num_params(args, cfg) -> NumParams:
    sec = cfg.get("params", {})
    vals = {}
    for name, default in (("theta", 1.0), ("s1", 0.0), ("s2", 1.0)):
        raw = _pick(getattr(args, name, None), sec, name, default)
        v = _param_value(raw, name)
        if v is None:
            raise InputError(f"numeric commands need a value for {name}, not 'sym'")
        vals[name] = float(v)
    try:
        return NumParams(vals["theta"], vals["s1"], vals["s2"])
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _level(text) -> tuple[int, int]:
    if text is None:
        return (0, 0)
    if isinstance(text, (list, tuple)):
        parts = list(text)
    else:
        parts = str(text).split(",")
    try:
        n, m = (int(p) for p in parts)
    except ValueError:
        raise InputError(f"level must be 'N,M', got {text!r}") from None
    if n < 0 or m < 0:
        raise InputError("level entries must be >= 0")
    return (n, m)


def _floats(text, what: str) -> list[float]:
    if isinstance(text, (list, tuple)):
        items = list(text)
    else:
        items = [t for t in str(text).split(",") if t.strip()]
    try:
        return [float(t) for t in items]
    except ValueError:
        raise InputError(f"{what} must be a comma-separated list of numbers") from None


def _grid(args, cfg) -> list[float]:
    sec = cfg.get("grid", {})
    raw = _pick(getattr(args, "grid", None), sec, "C", "default")
    if raw == "default":
        return sorted(DEFAULT_GRID)
    vals = _floats(raw, "grid")
    if not vals or any(v == 0 or not math.isfinite(v) for v in vals):
        raise InputError("grid values must be finite and nonzero")
    return vals


def _point(args):
    if getattr(args, "point", None):
        try:
            with open(args.point) as fh:
                return point_from_json(json.load(fh))
        except OSError as exc:
            raise InputError(f"cannot read point file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise InputError(f"point file is not JSON: {exc}") from None
    if getattr(args, "alpha", None) is None:
        raise InputError("give --point FILE or --alpha (and optionally --beta)")
    return make_point(_floats(args.alpha, "alpha"), _floats(args.beta or "", "beta"))


# -- output --------------------------------------------------------------------------

def _clean(obj):
    """JSON-safe copy: non-finite floats become strings, tuples become lists."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else repr(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if hasattr(obj, "item"):
        return _clean(obj.item())
    return obj


def atomic_write(path: str | Path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _header(command: str, seed, config: dict) -> dict:
    return {"tool": "thomalab", "version": __version__, "command": command,
            "seed": seed, "config": config}


def report_bytes(command: str, seed, config: dict, result: dict, status: str) -> bytes:
    rep = {"schema": SCHEMA, "header": _header(command, seed, config),
           "status": status, "result": result}
    return (json.dumps(_clean(rep), sort_keys=True, indent=2, allow_nan=False) + "\n").encode()


def _emit(args, data: bytes, out=None) -> None:
    out = out if out is not None else getattr(args, "out", None)
    if out and out != "-":
        atomic_write(out, data)
    else:
        sys.stdout.write(data.decode())


# -- commands ------------------------------------------------------------------------

def _parse(expr: str, family=None, level=None):
    return parse_poly(expr, family, level)


def cmd_apply(args, cfg) -> int:
    op = args.op
    if op == "A-nat":
        u = _parse(args.expr, "moment")
        if args.n is None or args.m is None:
            raise InputError("--op A-nat needs --n and --m")
        res = apply_A_nat(u, args.n, args.m)
    else:
        u = _parse(args.expr, "moment")
        res = {"A": apply_A, "A-petrov": apply_A_petrov, "petrov-limit": degenerate_to_petrov}[op](u)
    binds = _symbolic_params(args, cfg)
    if binds:
        res = res.bind_params(binds)
    text = to_grouped(res) if args.format == "grouped" else to_text(res)
    if args.out:
        config = {"op": op, "expr": args.expr, "format": args.format, "n": args.n, "m": args.m,
                  "params": {k: str(v) for k, v in sorted(binds.items())}}
        _emit(args, report_bytes("apply", None, config, {"value": text}, "pass"))
    else:
        print(text)
    return EXIT_OK


def cmd_gamma(args, cfg) -> int:
    family = args.family
    level = _level(args.level) if args.level else None
    u = _parse(args.u, family, level)
    v = _parse(args.v, u.family, level)
    if level is None and isinstance(u, NatPoly) and u.level != v.level:
        # coordinates from both operands decide the common truncation
        level = tuple(max(a, b) for a, b in zip(u.level, v.level))
        u, v = _parse(args.u, "nat", level), _parse(args.v, "nat", level)
    elif level is None and isinstance(u, ExtPoly) and u.level != v.level:
        raise InputError(f"operands live at different levels {u.level} and {v.level}")
    if isinstance(u, MomentPoly):
        res = gamma(u, v)
    elif isinstance(u, ExtPoly):
        res = gamma_NM(u, v, u.level)
    elif isinstance(u, NatPoly):
        res = gamma_alpha_beta(u, v)
    else:
        raise InputError("unsupported family")
    binds = _symbolic_params(args, cfg)
    if binds:
        res = res.bind_params(binds)
    print(to_grouped(res) if args.format == "grouped" else to_text(res))
    return EXIT_OK


_RANGE_FLAGS = ("max_k", "max_level", "max_trunc", "max_grading", "max_phi", "max_petrov_k")


def cmd_verify(args, cfg) -> int:
    names = list(IDENTITIES) if args.identity == "all" else [args.identity]
    ranges = {k: getattr(args, k) for k in _RANGE_FLAGS if getattr(args, k) is not None}
    try:
        r = Ranges.from_mapping(ranges)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    reports = [verify_identity(n, r) for n in names]
    failed = sum(x["failed"] for x in reports)
    status = "pass" if failed == 0 else "fail"
    config = {"identity": args.identity, "ranges": r.__dict__.copy()}
    result = {"reports": reports, "total": sum(x["total"] for x in reports), "failed": failed}
    _emit(args, report_bytes("verify", None, config, result, status))
    return EXIT_OK if status == "pass" else EXIT_FAIL


def cmd_num(args, cfg) -> int:
    p = _point(args)
    params = _num_params(args, cfg)
    level = _level(args.level)
    q = args.quantity
    C = args.C
    if q in ("chi", "gamma-cd", "gamma-c", "a-chi") and C is None:
        raise InputError(f"--C is required for {q}")
    if q == "chi":
        value = chi(p, C, params.theta, level)
    elif q == "gamma-cd":
        value = gamma_CD_num(p, C, args.D if args.D is not None else C, level, params)
    elif q == "gamma-c":
        if not args.v:
            raise InputError("--v is required for gamma-c (e.g. x1, x-1, q2)")
        value = gamma_C_num(p, C, args.v, level, params)
    elif q == "a-chi":
        value = a_chi_num(p, C, params)
    elif q == "nat-limit":
        value = nat_limit_alpha1(p, params)
    else:
        if args.k is None:
            raise InputError("--k is required for q")
        value = eval_q(p, args.k, params.theta, level)
    config = {"quantity": q, "point": p.to_json(), "C": C, "D": args.D, "v": args.v,
              "k": args.k, "level": list(level),
              "params": {"theta": params.theta, "s1": params.s1, "s2": params.s2}}
    _emit(args, report_bytes("num", None, config, {"value": value}, "pass"))
    return EXIT_OK


def _sweep_csv(rep: dict) -> bytes:
    lines = ["C,value,claimed_limit,abs_err,within_tol"]
    for r in rep["rows"]:
        lines.append(f"{r['C']!r},{r['value']!r},{r['claimed_limit']!r},{r['abs_err']!r},"
                     f"{int(r['within_tol'])}")
    return ("\n".join(lines) + "\n").encode()


def cmd_sweep(args, cfg) -> int:
    from . import suites

    grid_sec = cfg.get("grid", {})
    if args.suite:
        seed = _seed(args.seed, grid_sec)
        if args.suite == "bounds":
            thetas = _floats(_pick(args.thetas, grid_sec, "thetas", "0.5,1,2"), "thetas")
            count = _pick(args.count, grid_sec, "count", 1000)
            grid = _grid(args, cfg)
            result = suites.bounds_suite(seed, count, thetas, grid)
            config = {"suite": "bounds", "count": count, "thetas": thetas, "grid": grid}
        elif args.suite == "limits":
            count = _pick(args.count, grid_sec, "count", 100)
            params = _num_params(args, cfg)
            result = suites.limit_suite(seed, count, params.theta)
            config = {"suite": "limits", "count": count, "theta": params.theta}
        else:
            count = _pick(args.count, grid_sec, "count", 20)
            params = _num_params(args, cfg)
            result = suites.a_chi_suite(seed, count, params=params)
            config = {"suite": "a-chi", "count": count,
                      "params": {"theta": params.theta, "s1": params.s1, "s2": params.s2}}
        _emit(args, report_bytes("sweep", seed, config, result, result["status"]))
        return EXIT_OK if result["status"] == "pass" else EXIT_FAIL
    if not args.limit:
        raise InputError("give --limit NAME or --suite NAME")
    p = _point(args)
    params = _num_params(args, cfg)
    grid = _grid(args, cfg)
    kw = {"level": _level(args.level)}
    if args.v:
        kw["v"] = args.v
    tol_const = _pick(args.tol_const, grid_sec, "tol_const", 20.0)
    rep = limit_sweep(p, args.limit, grid, params, tol_const=tol_const, **kw)
    if args.csv:
        atomic_write(args.csv, _sweep_csv(rep))
    config = {"limit": args.limit, "point": p.to_json(), "grid": grid, "v": args.v,
              "level": list(kw["level"]), "tol_const": tol_const,
              "params": {"theta": params.theta, "s1": params.s1, "s2": params.s2}}
    _emit(args, report_bytes("sweep", None, config, rep, rep["status"]))
    return EXIT_OK if rep["status"] == "pass" else EXIT_FAIL


def cmd_simulate(args, cfg) -> int:
    from . import sim
    from .sim import _kernel_py
    from .sim.core import SimConfig, SimError, SimState, csv_bytes, write_binary

    sec = cfg.get("sim", {})
    params = _num_params(args, cfg)
    seed = _seed(args.seed, sec)
    n = _pick(args.n, sec, "n", 3)
    m = _pick(args.m, sec, "m", 2)
    dt = float(_pick(args.dt, sec, "dt", 1e-3))
    t_end = float(_pick(args.t_end, sec, "t_end", 0.1))
    paths = _pick(args.paths, sec, "paths", 100)
    record_every = _pick(args.record_every, sec, "record_every", 1)
    workers = _pick(args.workers, sec, "workers", 1)
    mode = args.mode
    backend = _kernel_py if args.backend == "python" else sim.kernel
    if args.point or args.alpha is not None:
        p = _point(args)
    else:
        from .suites import REFERENCE_POINT as p
    try:
        start = SimState.from_point(p, n, m, params.theta)
        simcfg = SimConfig(n, m, dt, t_end, paths, seed, params,
                           gap_threshold=float(_pick(args.gap_threshold, sec, "gap_threshold",
                                                     1e-6)),
                           max_halvings=_pick(args.max_halvings, sec, "max_halvings", 20),
                           record_every=record_every, workers=workers)
    except SimError as exc:
        raise InputError(str(exc)) from None
    config = {"mode": mode, "start": p.to_json(), "sim": simcfg.to_dict()}
    if mode == "paths":
        res = sim.simulate(simcfg, start, backend)
        if args.traj:
            if args.format == "binary":
                import io
                buf = io.BytesIO()
                write_binary(res, buf)
                atomic_write(args.traj, buf.getvalue())
            else:
                atomic_write(args.traj, csv_bytes(res, {"start": p.to_json()}))
        from .suites import retention
        result = {"retention": retention(res.traj), "aborted": res.aborted,
                  "aborted_paths": [int(i) for i in res.status.nonzero()[0]],
                  "substeps_total": int(res.substeps.sum()), "backend": res.backend,
                  "final_mass_mean": float(res.final.sum(axis=1).mean())}
        status = result["retention"]["status"]
        _emit(args, report_bytes("simulate", seed, config, result, status))
        if res.aborted:
            return EXIT_ABORT
        return EXIT_OK if status == "pass" else EXIT_FAIL
    if mode == "consistency":
        exprs = [e for e in (args.f or "q1;q2;q1^2").split(";") if e.strip()]
        fs = [_parse(e, "moment") for e in exprs]
        try:
            runs = sim.generator_consistency(fs, start, dt, paths, params, seed=seed,
                                             workers=workers, backend=backend)
        except SimError as exc:
            raise InputError(str(exc)) from None
        status = "pass" if all(r["status"] == "pass" for r in runs) else "fail"
        config["f"] = exprs
        _emit(args, report_bytes("simulate", seed, config, {"runs": runs}, status))
        return EXIT_OK if status == "pass" else EXIT_FAIL
    rep = sim.omega0_report(simcfg, start, backend)
    _emit(args, report_bytes("simulate", seed, config, rep, "observational"))
    return EXIT_ABORT if rep["aborted"] else EXIT_OK


# -- argument parsing ----------------------------------------------------------------

def _add_params(p, symbolic: bool):
    hint = "'sym' or a rational" if symbolic else "a real value"
    p.add_argument("--theta", help=f"theta ({hint})")
    p.add_argument("--s1", help=f"s1 ({hint})")
    p.add_argument("--s2", help=f"s2 ({hint})")
    if symbolic:
        p.add_argument("--pa", help="Petrov a ('sym' or a rational)")
        p.add_argument("--ptau", help="Petrov tau ('sym' or a rational)")


def _add_point(p):
    p.add_argument("--point", help="JSON file with alpha (and beta) lists")
    p.add_argument("--alpha", help="comma-separated alphas, e.g. 0.5,0.3")
    p.add_argument("--beta", help="comma-separated betas")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="thomalab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"thomalab {__version__}")
    ap.add_argument("--config", help="TOML file with [params], [grid], [sim] sections")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("apply", help="apply a generator to a moment polynomial")
    p.add_argument("--op", choices=["A", "A-petrov", "A-nat", "petrov-limit"], default="A")
    p.add_argument("--expr", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--format", choices=["canonical", "grouped"], default="canonical")
    p.add_argument("--out", help="write a JSON report here instead of printing")
    _add_params(p, True)

    p = sub.add_parser("gamma", help="carre du champ of two polynomials")
    p.add_argument("--u", required=True)
    p.add_argument("--v", required=True)
    p.add_argument("--family", choices=["moment", "ext", "nat"])
    p.add_argument("--level", help="N,M (ext) or n,m (nat)")
    p.add_argument("--format", choices=["canonical", "grouped"], default="canonical")
    _add_params(p, True)

    p = sub.add_parser("verify", help="run exact identity sweeps")
    p.add_argument("--identity", choices=list(IDENTITIES) + ["all"], required=True)
    for flag in _RANGE_FLAGS:
        p.add_argument("--" + flag.replace("_", "-"), dest=flag, type=int)
    p.add_argument("--out", help="report path (default stdout)")

    p = sub.add_parser("num", help="evaluate a numeric quantity at a point")
    p.add_argument("--quantity", required=True,
                   choices=["chi", "gamma-cd", "gamma-c", "a-chi", "nat-limit", "q"])
    _add_point(p)
    p.add_argument("--C", type=float)
    p.add_argument("--D", type=float)
    p.add_argument("--v", help="x<i> or q<k>")
    p.add_argument("--k", type=int)
    p.add_argument("--level")
    p.add_argument("--out")
    _add_params(p, False)

    p = sub.add_parser("sweep", help="limit sweeps and seeded suites")
    p.add_argument("--limit", choices=list(LIMITS))
    p.add_argument("--suite", choices=["bounds", "limits", "a-chi"])
    _add_point(p)
    p.add_argument("--grid", help="'default' or comma-separated C values")
    p.add_argument("--v")
    p.add_argument("--level")
    p.add_argument("--tol-const", dest="tol_const", type=float)
    p.add_argument("--count", type=int)
    p.add_argument("--thetas")
    p.add_argument("--seed", type=int)
    p.add_argument("--csv", help="write the sweep table here")
    p.add_argument("--out")
    _add_params(p, False)

    p = sub.add_parser("simulate", help="simulate the truncated diffusion")
    p.add_argument("--mode", choices=["paths", "consistency", "omega0"], default="paths")
    _add_point(p)
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--paths", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--record-every", dest="record_every", type=int)
    p.add_argument("--gap-threshold", dest="gap_threshold", type=float)
    p.add_argument("--max-halvings", dest="max_halvings", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--backend", choices=["auto", "python"], default="auto")
    p.add_argument("--f", help="';'-separated test functions for --mode consistency")
    p.add_argument("--traj", help="trajectory file (paths mode)")
    p.add_argument("--format", choices=["csv", "binary"], default="csv")
    p.add_argument("--out", help="report path (default stdout)")
    _add_params(p, False)
    return ap


_COMMANDS = {"apply": cmd_apply, "gamma": cmd_gamma, "verify": cmd_verify, "num": cmd_num,
             "sweep": cmd_sweep, "simulate": cmd_simulate}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _load_toml(args.config)
        return _COMMANDS[args.command](args, cfg)
    except (DegenerationError, RuntimeAbort) as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except (InputError, ParseError, PointError, PreconditionError, UnknownIdentity,
            UnknownLimit, PolyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        print(f"aborted: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
