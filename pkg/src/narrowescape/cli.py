"""
Command-line front end.

Every run prints one JSON document (or CSV for ``validate``) whose header echoes
the fully resolved configuration.  Floats carry 9 significant digits.  Exit codes:
0 success, 1 usage or input error, 2 a validation threshold was breached.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import asymptotics, eigenshift, interaction
from . import potential as pot
from .errors import NarrowEscapeError, UsageError
from .geometry import BoundaryArc, TargetConfiguration, validate

CSV_VERSION = "narrowescape-validate/1"
CSV_COLUMNS = ["case", "eps", "asym", "direct", "mc_mean", "mc_stderr", "abs_err", "slope"]
CLUSTER_SCALE = 0.1  # arcs whose centers are closer than this are treated as a cluster


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _sig9(obj):
    if isinstance(obj, float):
        return float(f"{obj:.9g}") if math.isfinite(obj) else obj
    if isinstance(obj, (np.floating,)):
        return _sig9(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_sig9(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {k: _sig9(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sig9(v) for v in obj]
    return obj


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


def _point(text):
    try:
        parts = [float(p) for p in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad point {text!r}") from exc
    if len(parts) != 2:
        raise UsageError(f"a point needs two coordinates, got {text!r}")
    return np.array(parts)


def _floats(text):
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="narrowescape", description=__doc__.strip().splitlines()[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(sp, at=True):
        sp.add_argument("--config", help="geometry JSON, optionally with a potential block")
        sp.add_argument("--eps", type=float, help="arc half-length")
        sp.add_argument("--center", type=float, default=0.0, help="center angle of the first arc")
        sp.add_argument("--d", type=float, help="scaled center spacing of a cluster")
        sp.add_argument("--n", type=int, help="number of equally spaced arcs in a cluster")
        sp.add_argument("--offsets", help="comma-separated scaled arc positions of a cluster")
        sp.add_argument("--out", help="write the report here instead of stdout")
        sp.add_argument("--format", choices=["json", "csv"], default="json")
        if at:
            sp.add_argument("--at", default="0,0", help="evaluation point x,y")

    common(sub.add_parser("escape", help="asymptotic mean escape time"))
    common(sub.add_parser("flux", help="leading-order flux densities"), at=False)
    alpha = sub.add_parser("alpha", help="cluster interaction coefficients")
    alpha.add_argument("--d", type=float)
    alpha.add_argument("--n", type=int, default=2)
    alpha.add_argument("--offsets")
    alpha.add_argument("--order", type=int, help="Chebyshev truncation")
    alpha.add_argument("--out")
    alpha.add_argument("--format", choices=["json"], default="json")
    eig = sub.add_parser("eigen", help="eigenvalue shift")
    eig.add_argument("--j0", type=int, required=True)
    eig.add_argument("--eps", type=float, required=True)
    eig.add_argument("--center", type=float, default=0.0)
    eig.add_argument("--order", type=int, choices=[1, 2], default=2)
    eig.add_argument("--out")
    eig.add_argument("--format", choices=["json"], default="json")
    mc = sub.add_parser("mc", help="Monte Carlo escape time")
    common(mc)
    mc.add_argument("--h", type=float, default=1e-5)
    mc.add_argument("--trials", type=int, default=10000)
    mc.add_argument("--seed", type=int, default=0)
    val = sub.add_parser("validate", help="asymptotic vs direct vs Monte Carlo matrix")
    val.add_argument("--quick", action="store_true", help="reduced Monte Carlo budget")
    val.add_argument("--h", type=float)
    val.add_argument("--trials", type=int)
    val.add_argument("--seed", type=int, default=0)
    val.add_argument("--out")
    val.add_argument("--format", choices=["csv"], default="csv")
    return p


# --------------------------------------------------------------------------
# configuration resolution


def _load_config(args):
    """Geometry and potential from ``--config`` or the geometry flags."""
    potential = pot.none()
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
        config = TargetConfiguration.from_dict(doc)
        potential = pot.from_dict(doc.get("potential"))
        return config, potential
    if args.eps is None:
        raise UsageError("either --config or --eps is required")
    eps = args.eps
    positions = None
    if args.offsets:
        positions = _floats(args.offsets)
    elif args.d is not None:
        n = args.n if args.n is not None else 2
        positions = [k * args.d for k in range(n)]
    elif args.n is not None and args.n > 1:
        raise UsageError("--n needs --d")
    if positions is None:
        config = TargetConfiguration.single(eps, args.center)
    else:
        config = TargetConfiguration(tuple(BoundaryArc(args.center + p * eps, eps) for p in positions))
    return config, potential


def _expansion(config, potential):
    if not potential.is_constant:
        return asymptotics.drift_single_target(config, potential), {}
    n = len(config.arcs)
    if n == 1:
        return asymptotics.single_target(config), {}
    equal = np.allclose(config.half_lengths, config.half_lengths[0], rtol=1e-12, atol=0)
    if n == 2:
        sep = asymptotics.two_separated(config)
        extra = {}
        if equal:
            pos = asymptotics.scaled_positions(config)
            d = abs(pos[1])
            if d > 2.0:
                clu = asymptotics.two_clustered(config)
                extra = {"u_separated": sep, "u_clustered": clu}
                if d * config.half_lengths[0] < CLUSTER_SCALE:
                    return clu, extra
        return sep, extra
    return asymptotics.multi_cluster(config), {}


def _flat_csv(doc) -> str:
    """``key,value`` rows of the scalar fields; the run header goes in a comment."""
    buf = io.StringIO()
    buf.write(f"# run: {json.dumps(_sig9(doc.get('run', {})))}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for key, v in doc.items():
        if isinstance(v, (int, float, str)) and not isinstance(v, bool):
            w.writerow([key, _fmt(v)])
    return buf.getvalue()


def _emit(doc, args, out):
    if getattr(args, "format", "json") == "csv":
        text = _flat_csv(doc)
    else:
        text = json.dumps(_sig9(doc), sort_keys=False) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        out.write(text)


def _cmd_escape(args, out):
    config, potential = _load_config(args)
    validate(config)
    x = _point(args.at)
    res, extra = _expansion(config, potential)
    doc = {"run": {"command": "escape", "config": config.to_dict(), "potential": potential.to_dict(),
                   "at": x.tolist()}}
    doc["u"] = float(res.evaluate(x))
    doc.update(res.to_dict())
    doc.pop("samples", None)
    for key, r in extra.items():
        doc[key] = float(r.evaluate(x))
    _emit(doc, args, out)


def _cmd_flux(args, out):
    config, potential = _load_config(args)
    validate(config)
    n = len(config.arcs)
    if n == 1:
        fluxes = [asymptotics.single_target_flux(config)]
    elif n == 2:
        fluxes = asymptotics.two_separated_flux(config)
    else:
        raise UsageError("flux densities are available for one or two arcs")
    doc = {"run": {"command": "flux", "config": config.to_dict()},
           "fluxes": [{"arc": f.arc.to_dict(), "amplitude": f.amplitude, "mass": f.mass,
                       "correction": f.correction_order} for f in fluxes],
           "total_mass": sum(f.mass for f in fluxes)}
    _emit(doc, args, out)


def _cmd_alpha(args, out):
    if args.offsets:
        positions = _floats(args.offsets)
    elif args.d is not None:
        positions = [k * args.d for k in range(args.n)]
    else:
        raise UsageError("alpha needs --d or --offsets")
    geom = interaction.ClusterGeometry.from_positions(positions)
    sol = interaction.solve_cluster(geom, args.order)
    doc = {"run": {"command": "alpha", "positions": positions, "order": sol.order}}
    doc.update(sol.to_dict())
    _emit(doc, args, out)


def _cmd_eigen(args, out):
    arc = BoundaryArc(args.center, args.eps)
    validate(TargetConfiguration((arc,)))
    res = eigenshift.eigen_shift(args.j0, arc)
    doc = {"run": {"command": "eigen", "j0": args.j0, "eps": args.eps, "center": arc.center_angle}}
    doc.update(res.to_dict(args.order))
    _emit(doc, args, out)


def _cmd_mc(args, out):
    from .oracle import mc_escape
    config, potential = _load_config(args)
    x = _point(args.at)
    est = mc_escape(x, config, potential, h=args.h, trials=args.trials, seed=args.seed)
    doc = {"run": {"command": "mc", "config": config.to_dict(), "potential": potential.to_dict(),
                   "at": x.tolist(), "h": args.h, "trials": args.trials, "seed": args.seed}}
    doc.update(est.to_dict())
    _emit(doc, args, out)


# --------------------------------------------------------------------------
# validation matrix


def validation_budget(quick: bool, h=None, trials=None) -> tuple:
    """Monte Carlo step and trial count, filling defaults from the budget tier."""
    h = h if h is not None else (1e-4 if quick else 1e-5)
    trials = trials if trials is not None else (1000 if quick else 10000)
    return h, trials


def validation_rows(quick: bool, h=None, trials=None, seed: int = 0):
    """Rows of the validation matrix and the list of breached thresholds."""
    from .oracle import (bias_step, boundary_residual, eigen_direct, fit_sqrt_bias,
                         mc_escape, solve_direct)

    h, trials = validation_budget(quick, h, trials)
    origin = np.zeros(2)
    rows, breaches = [], []

    errs = []
    for eps in (0.1, 0.05, 0.025):
        cfg = TargetConfiguration.single(eps)
        sol = solve_direct(cfg)
        asym = float(asymptotics.single_target(cfg).evaluate(origin))
        direct = float(sol(origin))
        errs.append(abs(direct - asym))
        slope = math.log2(errs[-2] / errs[-1]) if len(errs) > 1 else None
        row = {"case": "single", "eps": eps, "asym": asym, "direct": direct,
               "abs_err": abs(direct - asym), "slope": slope}
        if abs(sol.total_mass + math.pi) > 1e-10:
            breaches.append(f"single eps={eps}: flux mass")
        if boundary_residual(sol) > 1e-8:
            breaches.append(f"single eps={eps}: Dirichlet residual")
        if eps == 0.1:
            est = mc_escape(origin, cfg, h=h, trials=trials, seed=seed)
            est2 = mc_escape(origin, cfg, h=bias_step(h, cfg), trials=trials, seed=seed + 1)
            bias = fit_sqrt_bias(est, est2) * math.sqrt(h)
            row.update(mc_mean=est.mean, mc_stderr=est.stderr)
            if abs(est.mean - direct) > 3.0 * (est.stderr + bias):
                breaches.append("single eps=0.1: Monte Carlo disagrees with the direct solve")
        rows.append(row)

    cfg = TargetConfiguration.from_pairs([(0.0, 0.05), (math.pi, 0.05)])
    sol = solve_direct(cfg)
    asym = float(asymptotics.two_separated(cfg).evaluate(origin))
    direct = float(sol(origin))
    rows.append({"case": "antipodal", "eps": 0.05, "asym": asym, "direct": direct,
                 "abs_err": abs(direct - asym)})
    if abs(direct - asym) > 5 * 0.05:
        breaches.append("antipodal: two-target formula")

    eps = 1e-3
    cfg = TargetConfiguration.from_pairs([(0.0, eps), (10 * eps, eps)])
    sol = solve_direct(cfg)
    asym = float(asymptotics.two_clustered(cfg).evaluate(origin))
    direct = float(sol(origin))
    rows.append({"case": "cluster_d10", "eps": eps, "asym": asym, "direct": direct,
                 "abs_err": abs(direct - asym)})
    if abs(direct - asym) > 0.05 * abs(direct):
        breaches.append("cluster d=10: clustered formula")

    eps = 0.05
    arc = BoundaryArc(0.0, eps)
    lam = eigen_direct(1, TargetConfiguration((arc,)))
    corr = eigenshift.corrected_shift(1, arc)
    rows.append({"case": "eigen_j1", "eps": eps, "asym": corr, "direct": lam, "abs_err": abs(lam - corr)})
    if abs(lam - corr) > 0.1 * lam:
        breaches.append("eigen j0=1: corrected shift")
    return rows, breaches


def _cmd_validate(args, out):
    h, trials = validation_budget(args.quick, args.h, args.trials)
    resolved = {"command": "validate", "quick": args.quick, "h": h, "trials": trials,
                "seed": args.seed}
    rows, breaches = validation_rows(args.quick, args.h, args.trials, args.seed)
    buf = io.StringIO()
    buf.write(f"# {CSV_VERSION}\n")
    buf.write(f"# config: {json.dumps(resolved, sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in CSV_COLUMNS])
    for b in breaches:
        buf.write(f"# breach: {b}\n")
    text = buf.getvalue()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        out.write(text)
    return 2 if breaches else 0


COMMANDS = {"escape": _cmd_escape, "flux": _cmd_flux, "alpha": _cmd_alpha,
            "eigen": _cmd_eigen, "mc": _cmd_mc, "validate": _cmd_validate}


def run(argv, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        args = build_parser().parse_args(argv)
        code = COMMANDS[args.command](args, out)
        return 0 if code is None else code
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (UsageError, NarrowEscapeError, ValueError, OSError) as exc:
        err.write(f"error: {type(exc).__name__}: {exc}\n")
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
