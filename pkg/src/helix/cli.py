"""Command-line entry point: ``helix <subcommand> ...``.

Exit codes: 0 success, 2 invalid input, 3 parameters outside a builder's regime.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .balls import Ball, grow_balls
from .constructions import (ScalingParams, admissibility_report, build_branching, build_uniform,
                            build_vortex_array, regime, scaling_terms)
from .energy import EnergyKind
from .errors import HelixError, RegimeError
from .field import GridSpec
from .spin import (ModelParams, SpinField, build_spiral, detect_vortices, extract_angles,
                   renormalized_energy, spin_energy)
from .sweep import SweepConfig, default_grid_n, emit, inequality_report, records_to_csv, records_to_json, run_sweep

EXIT_VALIDATION = 2
EXIT_REGIME = 3


def _dump(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, default=_jsonable)
    sys.stdout.write("\n")


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serialisable: {type(o).__name__}")


def _params(a) -> ScalingParams:
    eps = a.eps if a.eps is not None else a.sigma / 10
    return ScalingParams(a.sigma, a.theta, eps)


def _build(kind: str, p: ScalingParams, n: int | None):
    n = n or default_grid_n(p.eps)
    if kind == "uniform":
        return build_uniform(p, GridSpec.unit(n))
    if kind == "branching":
        return build_branching(p, GridSpec.unit(n))
    return build_vortex_array(p)


def cmd_eval(a) -> int:
    p = _params(a)
    t1, t2, t3 = scaling_terms(p, a.third)
    _dump({"sigma": p.sigma, "theta": p.theta, "eps": p.eps, "uniform_term": t1,
           "branching_term": t2, "vortex_term": t3, "s_value": min(t1, t2, t3), "regime": regime(p)})
    return 0


def cmd_construct(a) -> int:
    p = _params(a)
    c = _build(a.kind, p, a.grid_n)
    rep = admissibility_report(c)
    out = {"kind": c.kind, "sigma": p.sigma, "theta": p.theta, "eps": p.eps,
           "grid": [c.field.spec.nx, c.field.spec.ny], "h": c.field.spec.h,
           "atoms": len(c.measure.atoms), "boundary_deviation": rep.boundary_deviation,
           "curl_residual": rep.curl_residual, "tolerance": rep.tolerance, "admissible": rep.passed,
           "energies": {}}
    for k in EnergyKind:
        E = c.energy(k)
        out["energies"][k.value] = {"bulk": E.bulk, "regularizer": E.regularizer, "total": E.total}
    if a.out:
        np.savez_compressed(a.out, values=np.asarray(c.field.values), h=c.field.spec.h,
                            x0=c.field.spec.x0, y0=c.field.spec.y0,
                            atoms=np.array(c.measure.atoms, dtype=float).reshape(-1, 3))
        out["saved"] = a.out
    _dump(out)
    return 0


def cmd_sweep(a) -> int:
    cfg = SweepConfig.load(a.config) if a.config else SweepConfig.default()
    if a.format:
        cfg.format = a.format
    if a.timing:
        cfg.timing = True
    records = run_sweep(cfg)
    skipped = sum(r.skipped is not None for r in records)
    if skipped:
        print(f"skipped {skipped} record(s) outside a builder's regime", file=sys.stderr)
    out = a.out or cfg.output
    if out:
        emit(records, cfg.format, out)
    else:
        sys.stdout.write(records_to_csv(records) if cfg.format == "csv" else records_to_json(records))
    return 0


def cmd_balls(a) -> int:
    with open(a.input) as fh:
        data = json.load(fh)
    balls = [Ball(tuple(b["center"]), float(b["radius"]), float(b.get("charge", 0.0))) for b in data]
    fam = grow_balls(balls, a.t)
    _dump({"time": fam.time, "initial_radius_sum": fam.initial_radius_sum,
           "balls": [{"center": list(b.center), "radius": b.radius, "charge": b.charge,
                      "members": list(m)} for b, m in zip(fam.balls, fam.members)],
           "merge_log": [{"time": t, "merged": list(ids), "new": k} for t, ids, k in fam.merge_log]})
    return 0


def cmd_spin(a) -> int:
    if a.mode == "spiral":
        s = build_spiral(ModelParams(a.alpha, 1.0 / a.m), a.m, a.chi_row, a.chi_col)
    else:
        s = SpinField.constant(a.m)
    out = {"alpha": a.alpha, "m": a.m, "mode": a.mode, "F": spin_energy(s, a.alpha)}
    if a.report:
        if 0 < a.alpha <= 4:
            out["renormalized"] = renormalized_energy(s, a.alpha)
        if 0 < a.alpha < 4:
            out["optimal_angle"] = math.acos(a.alpha / 4)
        out["vortices"] = [{"cell": list(c), "sign": g} for c, g in detect_vortices(extract_angles(s))]
    _dump(out)
    return 0


def cmd_check(a) -> int:
    p = _params(a)
    c = _build(a.construct, p, a.grid_n)
    rows = inequality_report(c.field, c.measure, p, r_out=a.r_out, tol=c.tolerance)
    _dump([{"name": r.name, "lhs": r.lhs, "rhs": r.rhs, "ratio": r.ratio, "where": list(r.where)} for r in rows])
    return 0


def _add_params(sp, eps_default=None):
    sp.add_argument("--sigma", type=float, required=True)
    sp.add_argument("--theta", type=float, required=True)
    sp.add_argument("--eps", type=float, default=eps_default, help="default sigma/10")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="helix", description="Energy scaling experiments for vortex-carrying multi-well fields.")
    ap.add_argument("--version", action="version", version=f"helix {__version__}")
    sub = ap.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser("eval", help="evaluate the scaling function s(sigma, theta, eps)")
    _add_params(sp)
    sp.add_argument("--third", choices=["log_theta", "log_ratio"], default="log_theta")
    sp.set_defaults(fn=cmd_eval)

    sp = sub.add_parser("construct", help="build a competitor and report admissibility and energies")
    sp.add_argument("--kind", choices=["uniform", "branching", "vortex"], required=True)
    _add_params(sp)
    sp.add_argument("--grid-n", type=int, default=None)
    sp.add_argument("--out", help="write the field to this .npz file")
    sp.set_defaults(fn=cmd_construct)

    sp = sub.add_parser("sweep", help="run a parameter sweep")
    sp.add_argument("--config", help="SweepConfig JSON (default sweep when omitted)")
    sp.add_argument("--out")
    sp.add_argument("--format", choices=["csv", "json"])
    sp.add_argument("--timing", action="store_true", help="record wall-clock runtime_ms (output no longer reproducible)")
    sp.set_defaults(fn=cmd_sweep)

    sp = sub.add_parser("balls", help="run the ball construction")
    sp.add_argument("--input", required=True, help="JSON list of {center, radius, charge}")
    sp.add_argument("--t", type=float, required=True)
    sp.set_defaults(fn=cmd_balls)

    sp = sub.add_parser("spin", help="discrete spin model energies")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--m", type=int, default=32)
    sp.add_argument("--mode", choices=["spiral", "constant"], default="spiral")
    sp.add_argument("--chi-row", type=int, choices=[-1, 1], default=1)
    sp.add_argument("--chi-col", type=int, choices=[-1, 1], default=1)
    sp.add_argument("--report", action="store_true")
    sp.set_defaults(fn=cmd_spin)

    sp = sub.add_parser("check", help="inequality report on a constructed competitor")
    sp.add_argument("--construct", choices=["uniform", "branching", "vortex"], default="vortex")
    _add_params(sp)
    sp.add_argument("--grid-n", type=int, default=None)
    sp.add_argument("--r-out", type=float, default=None)
    sp.set_defaults(fn=cmd_check)
    return ap


def main(argv=None) -> int:
    a = build_parser().parse_args(argv)
    try:
        return a.fn(a)
    except RegimeError as e:
        print(f"helix: regime refused: {e}", file=sys.stderr)
        return EXIT_REGIME
    except (HelixError, ValueError, OSError, KeyError, json.JSONDecodeError) as e:
        print(f"helix: error: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
