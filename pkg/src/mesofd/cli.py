"""Command-line entry point ``mesofd``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import harness
from .errors import MesoFDError
from .lattice import build_lattice, lattice_kind, validate_lattice
from .scheme import (
    StencilTargets,
    coefficient_moments,
    constraint_residual,
    preset,
    recovered_pde,
    solve_three_level,
)
from .stability import (
    linear_edf_bounds,
    linear_edf_spec,
    spectral_scan,
    symbol_decomposition,
    three_level_check,
    two_level_explicit_check,
    level_amplitudes,
)
from .stepper import run


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _params(items) -> dict:
    out = {}
    for item in items or []:
        key, _, val = item.partition("=")
        try:
            out[key] = int(val)
        except ValueError:
            out[key] = float(val)
    return out


def _dump(obj, as_json: bool) -> None:
    if as_json:
        json.dump(obj, sys.stdout, indent=2, default=str)
        sys.stdout.write("\n")
        return
    for k, v in obj.items():
        print(f"{k}: {v}")


# -- subcommands -----------------------------------------------------------------

def _name(args) -> str:
    name = args.name_opt or args.name
    if not name:
        raise SystemExit("a name is required (positional or --name)")
    return name


def cmd_lattice(args) -> int:
    d0 = args.d0 if len(args.d0) > 1 else args.d0[0]
    c = args.c if len(args.c) > 1 else args.c[0]
    lat = build_lattice(_name(args), d0, c)
    rep = validate_lattice(lat)
    info = {
        "name": lat.name,
        "kind": lattice_kind(lat),
        "cs2": lat.cs2,
        "directions": [list(d) for d in lat.directions],
        "weights": [float(w) for w in lat.weights],
        "valid": rep.ok,
        "checks": rep.as_dict(),
    }
    _dump(info, args.json)
    return 0 if rep.ok else 1


def _scheme_info(c, args) -> dict:
    mc = coefficient_moments(c)
    info = {
        "scheme": c.as_dict(),
        "A": {f"A{l}{m}": v for (l, m), v in sorted(mc.A.items())},
        "B": {f"B{l}{m}": v for (l, m), v in sorted(mc.B.items())},
    }
    if args.dt is not None and args.cs2 is not None:
        info["pde"] = recovered_pde(c, args.dt, args.beta, args.cs2).as_dict()
    return info


_PRESET_OPTS = ("s_minus", "tau", "gamma", "ratio", "n", "case")


def cmd_scheme_preset(args) -> int:
    params = {k: getattr(args, k) for k in _PRESET_OPTS if getattr(args, k) is not None}
    params.update(_params(args.param))
    c = preset(_name(args), **params)
    _dump(_scheme_info(c, args), args.json)
    return 0


def cmd_scheme_solve(args) -> int:
    t = StencilTargets(args.a0, args.A10, args.A11, args.A21, args.A22)
    c = solve_three_level(t, name="solved")
    info = _scheme_info(c, args)
    info["residual"] = constraint_residual(c, t)
    info["ncde_consistent"] = t.ncde_consistent()
    _dump(info, args.json)
    return 0


def cmd_stability(args) -> int:
    c = preset(args.preset, **_params(args.param))
    mc = coefficient_moments(c)
    # cs^2 from the requested alpha: NCDE alpha = -(A22/A10) dt beta cs^2, wave alpha = A22 beta cs^2
    rep = recovered_pde(c, args.dt, args.beta, 1.0)
    if rep.kind == "inconsistent":
        raise SystemExit(f"preset {args.preset} is inconsistent: {rep.reasons}")
    cs2 = args.alpha / rep.alpha
    lat = build_lattice(args.lattice, args.d0, math.sqrt(cs2 / args.d0))
    u = _floats(args.u) if args.u else [0.0] * lat.dim
    dec = symbol_decomposition(lat, linear_edf_spec(lat, u, beta=args.beta, lam=args.lam))
    out = {"lattice": lat.name, "cs2": lat.cs2, "u2_over_cs2": float(np.dot(u, u)) / lat.cs2,
           "A00": mc.A[(0, 0)]}
    conditions = {}
    verdict = None
    if set(c.by_lag("a")) == {1}:
        r = two_level_explicit_check(c, dec)
        conditions.update({f"two_level:{k}": v for k, v in r.condition_results.items()})
        verdict = r.verdict
        if c.max_shift == 1 and args.lam == 0:
            b = linear_edf_bounds(lat, u, args.alpha, args.dt)
            conditions.update({f"bound:{k}": v for k, v in b.condition_results.items()})
    mx, wit = spectral_scan(c, dec, args.scan)
    if c.levels == 2:
        amps = level_amplitudes(c, dec, wit)
        den = 1.0 - amps.get(0, 0.0)
        p0, p1 = amps.get(-2, 0.0) / den, amps.get(-1, 0.0) / den
        conditions["schur_cohn_at_witness"] = {"ok": three_level_check(p0, p1), "value": [str(p0), str(p1)]}
    scan_ok = mx <= 1.0 + 1e-10
    conditions["scan"] = {"ok": scan_ok, "value": mx}
    if verdict is None:
        verdict = "stable" if scan_ok else "unstable"
    out.update({"conditions": conditions, "verdict": verdict, "max_modulus": mx,
                "witness": [float(x) for x in wit]})
    if args.json:
        _dump(out, True)
    else:
        print(f"lattice {lat.name}  cs2 = {lat.cs2:.6g}  |u|^2/cs2 = {out['u2_over_cs2']:.6g}")
        for name, res in conditions.items():
            print(f"  {name:<32} {'ok' if res['ok'] else 'FAIL':<5} {res['value']}")
        print(f"verdict: {verdict}")
        print(f"max |lambda| = {mx:.12g} at xi = ({', '.join(f'{x:.4f}' for x in wit)})")
    return 0


def _write_field(path, grid, field):
    X = grid.coords()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "phi"])
        for x, y, v in zip(X[0].ravel(), X[1].ravel(), field.ravel()):
            w.writerow([f"{x:.6e}", f"{y:.6e}", f"{v:.15e}"])


def cmd_run(args) -> int:
    if args.config:
        setup = harness.config_problem(harness.load_config(args.config), args.nx, args.nt)
    else:
        setup = harness.example_problem(args.example, args.case, args.nx, args.nt)
    res = run(setup.problem, setup.scheme, setup.grid, setup.builder, init=args.init)
    diag = {"gre": res.final_gre if setup.problem.exact else None, "blowup": res.blowup,
            "times": res.times, "mass": res.mass, "max_abs": res.max_abs, "meta": res.meta}
    if args.out:
        _write_field(args.out, setup.grid, res.field)
        side = args.out.rsplit(".", 1)[0] + ".json"
        with open(side, "w") as fh:
            json.dump(diag, fh, indent=2, default=str)
    print(f"steps = {res.meta['steps']}  init = {res.meta['init']}  blowup = {res.blowup}")
    if diag["gre"] is not None:
        print(f"GRE = {diag['gre']:.6e}")
    return 0


def cmd_converge(args) -> int:
    if args.stability_table:
        rows = harness.stability_table()
        text = harness.format_stability_csv(rows)
    else:
        if args.config:
            cfg = harness.load_config(args.config)
            levels = harness.config_ladder(cfg)
            table = harness.convergence_study(lambda n, m: harness.config_problem(cfg, n, m), levels=levels)
        else:
            table = harness.convergence_study(args.example, args.case)
        text = harness.format_csv(table)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mesofd", description="EDF-based multi-level finite-difference schemes")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lattice", help="show and validate a lattice model")
    p.add_argument("name", nargs="?")
    p.add_argument("--name", dest="name_opt")
    p.add_argument("--d0", type=_floats, default=[1.0 / 3.0], help="d0 per axis (comma separated)")
    p.add_argument("--c", type=_floats, default=[1.0], help="lattice speed per axis (comma separated)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_lattice)

    ps = sub.add_parser("scheme", help="scheme coefficients and moment constants")
    ss = ps.add_subparsers(dest="scheme_command", required=True)
    for name, fn in (("preset", cmd_scheme_preset), ("solve", cmd_scheme_solve)):
        q = ss.add_parser(name)
        if name == "preset":
            q.add_argument("name", nargs="?")
            q.add_argument("--name", dest="name_opt")
            q.add_argument("--param", action="append", help="preset parameter key=value")
            q.add_argument("--s-minus", dest="s_minus", type=float)
            q.add_argument("--tau", type=float)
            q.add_argument("--gamma", type=float)
            q.add_argument("--ratio", type=float)
            q.add_argument("--n", type=int)
            q.add_argument("--case", type=int)
        else:
            q.add_argument("--a0", type=float, default=0.0)
            q.add_argument("--A10", type=float, default=-1.0)
            q.add_argument("--A11", type=float, default=-1.0)
            q.add_argument("--A21", type=float, default=0.0)
            q.add_argument("--A22", type=float, default=0.5)
        q.add_argument("--dt", type=float)
        q.add_argument("--cs2", type=float)
        q.add_argument("--beta", type=float, default=1.0)
        q.add_argument("--json", action="store_true")
        q.set_defaults(func=fn)

    p = sub.add_parser("stability", help="von Neumann analysis of a preset")
    p.add_argument("--preset", default="srt")
    p.add_argument("--param", action="append")
    p.add_argument("--lattice", default="rd2q9")
    p.add_argument("--d0", type=float, default=1.0 / 3.0)
    p.add_argument("--u", default="")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--lam", type=int, choices=(0, 1), default=1, help="include the uu term (1) or not (0)")
    p.add_argument("--scan", type=int, default=64)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("run", help="run one example to T and write the field")
    p.add_argument("--example", type=int, default=2)
    p.add_argument("--case", type=int, default=1)
    p.add_argument("--nx", type=int, default=None)
    p.add_argument("--nt", type=int, default=None)
    p.add_argument("--init", default="auto", choices=("auto", "exact", "taylor", "bootstrap"))
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("converge", help="convergence table as CSV")
    p.add_argument("--example", type=int, default=2)
    p.add_argument("--case", type=int, default=1)
    p.add_argument("--stability-table", action="store_true")
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_converge)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run" and not args.config:
        base = harness.DEFAULT_LADDERS[args.example][0]
        args.nx = args.nx or base[0]
        args.nt = args.nt or base[1]
    try:
        return args.func(args)
    except MesoFDError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
