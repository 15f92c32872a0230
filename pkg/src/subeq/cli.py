"""Command-line front end.

Usage::

    subeq [COMMAND] [--config PATH] [--set KEY=VALUE ...] [--seed N] [--out DIR] [--quiet]

The result document is written as JSON to standard output (and to
``DIR/<command>.json`` when ``--out`` is given); diagnostics go to standard
error.  Exit codes: 0 pass or converged, 2 non-convergence, Undetermined or
a failed check, 3 invalid configuration, 4 internal defect.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import traceback

import numpy as np

from . import config as cfgmod
from .catalog import CatalogError, catalog_construct, catalog_listing
from .expr import ExprError, ExprEvalError, parse_expr
from .geometry import (BarrierParams, DomainSpec, GeometryError, boundary_convexity_test,
                       builtin_metric, make_barrier, verify_barrier)
from .grid import Grid, GridError, GridFunction
from .jets import GardingRootError
from .solver import (FlatUpdate, NonConvergence, SolveConfig, ValueCapExceeded,
                     f_subharmonic_test, perron_solve, sums_probe)
from .subequations import invariant_suite
from .witnesses import HarnessError, tube_pair_harness

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DEFECT = 0, 2, 3, 4


class _Log:
    def __init__(self, quiet):
        self.quiet = quiet

    def info(self, msg):
        if not self.quiet:
            print(msg, file=sys.stderr)

    def error(self, msg):
        print(f"error: {msg}", file=sys.stderr)


# ------------------------------------------------------------- assembly

def _metric(cfg):
    return builtin_metric(cfg.metric or f"euclidean:n={cfg.dim}")


def _domain(cfg, required=False):
    if not cfg.domain:
        if required:
            raise cfgmod.ConfigError(f"command {cfg.command!r} needs a domain expression")
        return None
    rho = parse_expr(cfg.domain)
    if rho.nvars > cfg.dim:
        raise cfgmod.ConfigError(f"domain uses x{rho.nvars} but the grid has {cfg.dim} axes")
    return DomainSpec(rho, name=cfg.domain)


def _grid_expr(cfg, grid, text, key):
    e = parse_expr(text)
    if e.nvars > cfg.dim:
        raise cfgmod.ConfigError(f"{key} uses x{e.nvars} but the grid has {cfg.dim} axes")
    return GridFunction.from_callable(grid, e)


def _subequation(cfg):
    F = catalog_construct(cfg.subequation)
    if F.dim != cfg.dim:
        raise cfgmod.ConfigError(f"{F.name} acts on R^{F.dim} but the grid has {cfg.dim} axes")
    return F


def _boundary_points(cfg, domain, metric, rng, count):
    """Random points of ``{rho = 0}`` inside the box, by Newton projection."""
    lo, hi = np.array(cfg.lo), np.array(cfg.hi)
    pts = []
    for _ in range(200 * count):
        if len(pts) == count:
            break
        try:
            x = domain.project_to_boundary(rng.uniform(lo, hi))
        except GeometryError:
            continue
        if np.all(np.isfinite(x)) and np.all(x >= lo) and np.all(x <= hi) and metric.in_box(x) \
                and abs(domain(x)) < 1e-10:
            pts.append(x)
    if len(pts) < count:
        raise cfgmod.ConfigError("could not find boundary points of the domain inside the box")
    return pts


# ------------------------------------------------------------- commands

def cmd_solve(cfg, log):
    F = _subequation(cfg)
    metric = _metric(cfg)
    grid = Grid(cfg.lo, cfg.hi, cfg.grid, _domain(cfg), metric)
    phi = _grid_expr(cfg, grid, cfg.boundary, "boundary")
    scfg = SolveConfig(tol_iter=cfg.tol_iter, tol_residual=cfg.tol_residual,
                       max_sweeps=cfg.max_sweeps, parallel=cfg.parallel,
                       threads=cfg.threads, backend=cfg.backend)
    code = EXIT_OK
    try:
        u, rep = perron_solve(F, metric, grid, phi, scfg)
    except NonConvergence as exc:
        log.error(str(exc))
        u, rep, code = exc.u, exc.report, EXIT_FAIL
    sub = f_subharmonic_test(u, F, metric, tol=cfg.tol_residual, backend=cfg.backend)
    rep.verdicts["subharmonic"] = bool(sub.passed)
    log.info(f"{F.name}: {rep.sweeps} sweeps, residual {rep.max_margin_residual:.3e}")
    doc = json.loads(rep.to_json())
    return code, doc, {"solution.csv": u.to_csv()}


def cmd_convexity(cfg, log):
    F = _subequation(cfg)
    metric = _metric(cfg)
    domain = _domain(cfg, required=True)
    rng = np.random.default_rng(cfg.seed)
    pts = [np.array(cfg.x0)] if cfg.x0 else _boundary_points(cfg, domain, metric, rng, cfg.points)
    rows = []
    for i, x in enumerate(pts):
        r = boundary_convexity_test(F, metric, domain, x, cfg.lambdas, seed=cfg.seed + i)
        rows.append({"x": x.tolist(), "verdicts": {repr(k): v for k, v in r.verdicts.items()}})
    all_v = [v for r in rows for v in r["verdicts"].values()]
    summary = "Yes" if all(v == "Yes" for v in all_v) else (
        "No" if all(v == "No" for v in all_v) else "Undetermined")
    log.info(f"{F.name}: strict convexity {summary} at {len(rows)} boundary point(s)")
    doc = {"subequation": F.name, "lambdas": list(cfg.lambdas), "points": rows,
           "verdicts": summary}
    return (EXIT_OK if summary == "Yes" else EXIT_FAIL), doc, {}


def cmd_dual_check(cfg, log):
    F = catalog_construct(cfg.subequation)
    rep = invariant_suite(F, samples=cfg.samples, seed=cfg.seed)
    log.info(f"{F.name}: invariant suite {'passed' if rep.passed else 'failed'}")
    doc = {"subequation": F.name, "dual": F.dual_info.name if F.dual_info else f"dual({F.name})",
           **rep.to_dict(), "verdicts": {"passed": rep.passed}}
    return (EXIT_OK if rep.passed else EXIT_FAIL), doc, {}


def cmd_barrier(cfg, log):
    F = _subequation(cfg)
    metric = _metric(cfg)
    domain = _domain(cfg, required=True)
    rng = np.random.default_rng(cfg.seed)
    x0 = np.array(cfg.x0) if cfg.x0 else _boundary_points(cfg, domain, metric, rng, 1)[0]
    lam = cfg.lambdas[0] if cfg.lambdas else 0.0
    res = make_barrier(F, metric, domain, x0, lam, seed=cfg.seed, samples=cfg.samples)
    doc = {"subequation": F.name, "x0": x0.tolist(), "lambda": lam, "ok": res.ok,
           "params": None, "reverified": False, "diagnostics": res.diagnostics}
    if res.ok:
        p = res.params
        doc["params"] = {"C": p.C, "eps": p.eps, "r0": p.r0}
        ok, _ = verify_barrier(F, metric, domain, x0, lam, BarrierParams(p.C, p.eps, p.r0),
                               samples=cfg.samples, seed=cfg.seed + 1)
        doc["reverified"] = bool(ok)
    doc["verdicts"] = {"found": res.ok, "reverified": doc["reverified"]}
    log.info(f"{F.name}: barrier {'found' if res.ok else 'not found'}")
    return (EXIT_OK if res.ok and doc["reverified"] else EXIT_FAIL), doc, {}


def cmd_counterexample(cfg, log):
    try:
        doc = tube_pair_harness(c=cfg.c, h=cfg.h, samples=cfg.samples, seed=cfg.seed)
    except HarnessError as exc:
        raise cfgmod.ConfigError(str(exc)) from None
    ok = doc["signature_ok"] and doc["zmp"]["status"] == "violation"
    doc["verdicts"] = {"signature": doc["signature_ok"], "comparison_fails": ok}
    log.info(f"tube pair: violation {doc['violation']:.4f} for c = {cfg.c}")
    return (EXIT_OK if ok else EXIT_FAIL), doc, {}


def cmd_sums_probe(cfg, log):
    if not cfg.u or not cfg.v:
        raise cfgmod.ConfigError("sums-probe needs expressions u and v")
    grid = Grid(cfg.lo, cfg.hi, cfg.grid, _domain(cfg))
    u = _grid_expr(cfg, grid, cfg.u, "u")
    v = _grid_expr(cfg, grid, cfg.v, "v")
    res = sums_probe(u, v, cfg.eps)
    doc = res.to_dict()
    doc["verdicts"] = {"status": res.status, "monotone": res.monotone,
                       "penalty_trend": res.penalty_trend}
    log.info(f"sums probe: {res.status}, M0 = {res.M0:.6g}")
    ok = res.status == "ok" and res.monotone and res.penalty_trend
    return (EXIT_OK if ok else EXIT_FAIL), doc, {}


def cmd_catalog(cfg, log):
    rows = [{"name": n, "parameters": keys, "formula": f} for n, keys, f in catalog_listing()]
    return EXIT_OK, {"entries": rows}, {}


COMMANDS = {
    "solve": cmd_solve,
    "convexity": cmd_convexity,
    "dual-check": cmd_dual_check,
    "barrier": cmd_barrier,
    "counterexample": cmd_counterexample,
    "sums-probe": cmd_sums_probe,
    "catalog": cmd_catalog,
}


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, (np.floating, float)):
        f = float(o)
        return f if math.isfinite(f) else repr(f)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    return o


def run(cfg, quiet=False, stdout=None):
    """Execute one configuration.  Returns ``(exit_code, document)``."""
    log = _Log(quiet)
    stdout = sys.stdout if stdout is None else stdout
    try:
        code, doc, files = COMMANDS[cfg.command](cfg, log)
    except (cfgmod.ConfigError, CatalogError, ExprError, GeometryError, GridError) as exc:
        log.error(str(exc))
        return EXIT_CONFIG, None
    except (FlatUpdate, ValueCapExceeded, ExprEvalError) as exc:
        log.error(f"{type(exc).__name__}: {exc}")
        return EXIT_FAIL, None
    except GardingRootError as exc:
        log.error(f"internal defect: {exc}")
        return EXIT_DEFECT, None
    except Exception:  # noqa: BLE001 - anything else is a defect of this package
        log.error("internal defect")
        traceback.print_exc(file=sys.stderr)
        return EXIT_DEFECT, None
    doc = _jsonable({"command": cfg.command, "seed": cfg.seed, **doc, "exit_code": code})
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        with open(os.path.join(cfg.out, f"{cfg.command}.json"), "w") as fh:
            fh.write(text)
        with open(os.path.join(cfg.out, "config.txt"), "w") as fh:
            fh.write(cfgmod.serialize(cfg))
        for name, content in files.items():
            with open(os.path.join(cfg.out, name), "w") as fh:
                fh.write(content)
    if not quiet:
        stdout.write(text)
    return code, doc


def build_parser():
    ap = argparse.ArgumentParser(prog="subeq", description="Subequation calculus toolkit.")
    ap.add_argument("command", nargs="?", choices=sorted(COMMANDS),
                    help="overrides the command key of the configuration")
    ap.add_argument("--config", help="key = value text or JSON configuration file")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override one configuration key (repeatable)")
    ap.add_argument("--seed", type=int, help="unsigned 64-bit seed")
    ap.add_argument("--out", help="directory for artifacts")
    ap.add_argument("--quiet", action="store_true", help="no diagnostics, no JSON echo")
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = cfgmod.load(args.config) if args.config else cfgmod.RunConfig()
        over = {}
        for item in args.set:
            if "=" not in item:
                raise cfgmod.ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            k, v = item.split("=", 1)
            over[k.strip()] = v.strip()
        if args.command:
            over["command"] = args.command
        if args.seed is not None:
            over["seed"] = args.seed
        if args.out is not None:
            over["out"] = args.out
        if over:
            cfg = cfg.replace(**over)
    except (cfgmod.ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    code, _ = run(cfg, quiet=args.quiet)
    return code


if __name__ == "__main__":
    sys.exit(main())
