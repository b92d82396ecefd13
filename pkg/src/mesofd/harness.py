"""Example problems, global relative error and convergence tables.

Grid convention for the periodic examples: ``Nx = 1/dx`` on ``[0, 2]^2``, so
each axis has ``2 Nx`` nodes. The wave example lives on ``[0, 1]^2`` with
``Nx`` cells and exact Dirichlet data. ``Nt = 1/dt`` and ``T = 1``.
"""

from __future__ import annotations

import configparser
import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import UnknownExample, ZeroReference
from .lattice import LatticeModel, build_lattice, standard_lattice
from .scheme import SchemeCoefficients, StencilTargets, preset, solve_three_level
from .stepper import EDFBuilder, Grid, ProblemSpec, make_edf_builder, make_grid, run

__all__ = [
    "ConvergenceTable",
    "ExampleSetup",
    "DEFAULT_LADDERS",
    "STABILITY_LADDER",
    "gre",
    "example_problem",
    "convergence_study",
    "stability_table",
    "emit_csv",
    "format_csv",
    "load_config",
    "config_problem",
    "config_ladder",
    "format_stability_csv",
]

DEFAULT_LADDERS = {
    1: ((10, 6), (20, 24), (40, 96), (80, 384)),
    2: ((10, 12), (20, 48), (40, 192), (80, 768)),
    3: ((5, 10), (10, 20), (20, 40), (40, 80)),
}
STABILITY_LADDER = ((10, 6), (20, 24), (40, 96), (80, 384))


def gre(numeric, exact) -> float:
    """``sum |phi - phi*| / sum |phi*|`` over all nodes."""
    numeric = np.asarray(numeric, dtype=float)
    exact = np.asarray(exact, dtype=float)
    if numeric.shape != exact.shape:
        raise ValueError(f"shape mismatch {numeric.shape} vs {exact.shape}")
    ref = np.sum(np.abs(exact))
    if ref == 0.0:
        raise ZeroReference("exact field is identically zero")
    return float(np.sum(np.abs(numeric - exact)) / ref)


@dataclass
class ExampleSetup:
    problem: ProblemSpec
    scheme: SchemeCoefficients
    lattice: LatticeModel
    builder: EDFBuilder
    grid: Grid

    def __iter__(self):
        # unpacks as (problem, scheme, lattice, builder)
        return iter((self.problem, self.scheme, self.lattice, self.builder))


# -- exact solutions and sources -----------------------------------------------

def _ex1_fields(kappa: float, u):
    ux, uy = u
    g = 1.0 - 2.0 * math.pi ** 2 * kappa

    def exact(X, t):
        return np.exp(g * t) * np.sin(math.pi * (X[0] + X[1]))

    def source(X, t):
        s = math.pi * (X[0] + X[1])
        return np.exp(g * t) * (np.sin(s) + math.pi * (ux + uy) * np.cos(s))

    def flux(X, t):
        R = source(X, t)
        return np.stack([ux * R, uy * R])

    return exact, source, flux


def _ex2_exact(D: float, u):
    ux, uy = u

    def exact(X, t):
        return np.exp(-2.0 * D * math.pi ** 2 * t) * np.cos(math.pi * (X[0] + X[1]) - math.pi * (ux + uy) * t)

    return exact


def _ex3_exact(X, t):
    return np.exp(X[0] + X[1] + t)


def _periodic_setup(Nx: int, Nt: int):
    dx, dt = 1.0 / Nx, 1.0 / Nt
    grid = make_grid([(0.0, 2.0), (0.0, 2.0)], 2 * Nx, "periodic")
    lat = standard_lattice("rd2q9", dx / dt)
    return grid, lat, dt


def example_problem(example: int, case: int, Nx: int, Nt: int, *, D: float | None = None) -> ExampleSetup:
    """Fully wired setup for one example, case and resolution.

    ``D`` overrides the diffusion coefficient of Example 2 (used for the
    stability table); the scheme then keeps its ``A22`` and ``beta`` and the
    grid must be consistent with it.
    """
    if example not in (1, 2, 3) or case not in (1, 2, 3):
        raise UnknownExample(f"no example {example} case {case}")
    scheme = preset("example", n=example, case=case)

    if example in (1, 2):
        grid, lat, dt = _periodic_setup(Nx, Nt)
        A22 = {1: 0.5, 2: 0.5, 3: 1.0}[case] if example == 2 else 0.5
        beta = 0.5 if (example, case) == (2, 3) else 1.0
        alpha = A22 * dt * beta * lat.cs2
        if example == 1:
            u = (0.1, 0.1)
            exact, source, flux = _ex1_fields(alpha, u)
            p = ProblemSpec("ncde", dt, 1.0, alpha, u=np.array(u), beta=beta, lam=1,
                            source=source, source_flux=flux, exact=exact, name=f"example1_case{case}")
        else:
            u = (1.0, 1.0)
            if D is not None and not math.isclose(D, alpha, rel_tol=1e-12):
                raise ValueError(f"D = {D} is inconsistent with this grid (scheme gives {alpha})")
            p = ProblemSpec("ncde", dt, 1.0, alpha, u=np.array(u), beta=beta, lam=1,
                            exact=_ex2_exact(alpha, u), name=f"example2_case{case}")
    else:
        dx, dt = 1.0 / Nx, 1.0 / Nt
        grid = make_grid([(0.0, 1.0), (0.0, 1.0)], Nx, "dirichlet_exact")
        c = dx / dt
        if case == 1:
            lat = build_lattice("rd2q5i", 1.0 / 3.0, c)
        else:
            lat = standard_lattice("rd2q9", c)
        beta = 0.75 if case == 3 else 1.0
        gamma = {1: 0.375, 2: 0.375, 3: 0.5}[case]
        alpha = gamma * beta * lat.cs2
        p = ProblemSpec("wave", dt, 1.0, alpha, beta=beta, lam=0, exact=_ex3_exact,
                        initial_rate=lambda X: _ex3_exact(X, 0.0), name=f"example3_case{case}")
    return ExampleSetup(p, scheme, lat, make_edf_builder(p, lat), grid)


# -- tables ------------------------------------------------------------------

@dataclass
class ConvergenceTable:
    rows: list = field(default_factory=list)  # (Nx, Nt, gre, order or None)
    meta: dict = field(default_factory=dict)

    @property
    def gres(self) -> list:
        return [r[2] for r in self.rows]

    @property
    def orders(self) -> list:
        return [r[3] for r in self.rows]


def _orders(gres: Sequence[float]) -> list:
    out = [None]
    for prev, cur in zip(gres, gres[1:]):
        ok = all(math.isfinite(v) and v > 0 for v in (prev, cur))
        out.append(math.log2(prev / cur) if ok else None)
    return out


def convergence_study(example, case: int = 1, levels: Sequence[tuple[int, int]] | None = None,
                      init: str = "auto") -> ConvergenceTable:
    """Run each ``(Nx, Nt)`` level to ``T`` and tabulate GRE and order.

    ``example`` is an example id or a factory ``(Nx, Nt) -> ExampleSetup``.
    """
    factory = example if callable(example) else (lambda n, m: example_problem(example, case, n, m))
    levels = tuple(levels or DEFAULT_LADDERS.get(example, ()))
    if len(levels) < 2:
        raise ValueError("a convergence study needs at least two levels")
    gres, notes = [], []
    for Nx, Nt in levels:
        setup = factory(Nx, Nt)
        res = run(setup.problem, setup.scheme, setup.grid, setup.builder, init=init)
        gres.append(res.final_gre)
        notes.append(res.meta["init"])
    scaling = "acoustic" if example == 3 or setup.problem.pde == "wave" else "diffusive"
    meta = {"example": example if not callable(example) else "custom", "case": case,
            "scaling": scaling, "init": notes[0]}
    if example == 1:
        meta["kappa"] = "0.01 (derived from beta = 1 and cs^2 = c^2/3)"
    return ConvergenceTable([(n, m, g, o) for (n, m), g, o in zip(levels, gres, _orders(gres))], meta)


def stability_table(levels: Sequence[tuple[int, int]] = STABILITY_LADDER, D: float = 0.01) -> list[dict]:
    """Example 2 Case 1 with ``D = 0.01`` on the diffusive ladder.

    Each row carries ``dx``, ``dt``, ``u^2/cs^2`` as an exact fraction, the
    GRE (``inf`` on blowup) and the blowup flag.
    """
    rows = []
    for Nx, Nt in levels:
        setup = example_problem(2, 1, Nx, Nt, D=D)
        p, dt = setup.problem, setup.problem.dt
        res = run(p, setup.scheme, setup.grid, setup.builder)
        c2 = Fraction(Nt, Nx) ** 2
        ratio = Fraction(2) / (c2 / 3)
        rows.append({"Nx": Nx, "Nt": Nt, "dx": 1.0 / Nx, "dt": dt, "u2_over_cs2": ratio,
                     "gre": res.final_gre, "blowup": res.blowup})
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return f"{v:.5e}"


def format_csv(table: ConvergenceTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["Nx", "Nt", "GRE", "order"])
    for Nx, Nt, g, o in table.rows:
        w.writerow([Nx, Nt, _fmt(g), _fmt(o)])
    return buf.getvalue()


def format_stability_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dx", "dt", "u2_over_cs2", "GRE", "blowup"])
    for r in rows:
        w.writerow([_fmt(r["dx"]), _fmt(r["dt"]), str(r["u2_over_cs2"]), _fmt(r["gre"]), int(r["blowup"])])
    return buf.getvalue()


def emit_csv(table: ConvergenceTable, destination) -> None:
    """Write ``Nx,Nt,GRE,order`` rows to a path or an open text stream."""
    text = format_csv(table)
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w", newline="") as fh:
            fh.write(text)


# -- config files ---------------------------------------------------------------

def load_config(path) -> dict:
    """Flatten an INI file with ``[problem]``, ``[scheme]`` and ``[grid]`` sections."""
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keep A10 etc.
    if not cp.read(path):
        raise FileNotFoundError(path)
    out = {}
    for sec in ("problem", "scheme", "grid"):
        if cp.has_section(sec):
            out.update(dict(cp.items(sec)))
    return out


def config_problem(cfg: dict, nx: int | None = None, nt: int | None = None) -> ExampleSetup:
    """Setup for a custom periodic problem on ``[0, 2]^2`` from config keys.

    The scheme is solved from ``a0, A10, A11, A21, A22`` on the shifted
    three-level stencil. The initial field is ``sin(pi (x + y))``, for which
    the constant-coefficient equations have closed-form solutions:
    ``exp(-2 alpha pi^2 t) sin(pi (x + y) - pi (ux + uy) t)`` for the NCDE
    (``D0 = I``) and ``cos(pi sqrt(2 alpha) t) sin(pi (x + y))`` for the
    wave equation started at rest.
    """
    pde = cfg.get("pde", "ncde")
    if pde not in ("ncde", "wave"):
        raise ValueError(f"pde must be 'ncde' or 'wave', got {pde!r}")
    nx = int(nx if nx is not None else cfg.get("nx", 20))
    nt = int(nt if nt is not None else cfg.get("nt", 48))
    T = float(cfg.get("T", 1.0))
    beta = float(cfg.get("beta", 1.0))
    ux, uy = float(cfg.get("ux", 0.0)), float(cfg.get("uy", 0.0))
    boundary = cfg.get("boundary", "periodic")
    if boundary != "periodic":
        raise ValueError("config problems support periodic boundaries only")
    dx, dt = 1.0 / nx, 1.0 / nt
    grid = make_grid([(0.0, 2.0), (0.0, 2.0)], 2 * nx, boundary)
    lat = build_lattice(cfg.get("lattice", "rd2q9"), float(cfg.get("d0", 1.0 / 3.0)), dx / dt)
    t = StencilTargets(a0=float(cfg.get("a0", 0.0)), A10=float(cfg.get("A10", -1.0)),
                       A11=float(cfg.get("A11", -1.0)), A21=float(cfg.get("A21", 0.0)),
                       A22=float(cfg.get("A22", 0.5)))
    if pde == "wave":
        # wave stencils have A10 = A11 = A21 = 0; keep the a0 family of the wave preset
        g = t.A22
        scheme = SchemeCoefficients({(1, 0): g, (0, 0): 2.0 - 2.0 * g, (-1, 0): g, (0, -1): -1.0},
                                    {}, True, "config_wave")
        alpha = g * beta * lat.cs2
    else:
        scheme = solve_three_level(t, name="config")
        alpha = -(t.A22 / t.A10) * dt * beta * lat.cs2
    if "alpha" in cfg and not math.isclose(float(cfg["alpha"]), alpha, rel_tol=1e-6):
        raise ValueError(f"alpha = {cfg['alpha']} disagrees with the scheme value {alpha}")
    if pde == "wave":
        w = math.pi * math.sqrt(2.0 * alpha)

        def exact(X, tt):
            return math.cos(w * tt) * np.sin(math.pi * (X[0] + X[1]))

        p = ProblemSpec("wave", dt, T, alpha, beta=beta, lam=0, exact=exact,
                        initial_rate=lambda X: np.zeros(X.shape[1:]), name="config")
    else:
        def exact(X, tt):
            return math.exp(-2.0 * alpha * math.pi ** 2 * tt) * np.sin(math.pi * (X[0] + X[1] - (ux + uy) * tt))

        p = ProblemSpec("ncde", dt, T, alpha, u=np.array([ux, uy]), beta=beta, lam=1,
                        exact=exact, name="config")
    return ExampleSetup(p, scheme, lat, make_edf_builder(p, lat), grid)


def config_ladder(cfg: dict, count: int = 4) -> tuple:
    """Refinement ladder from the config's base ``(nx, nt)``: diffusive for NCDE, acoustic for waves."""
    nx, nt = int(cfg.get("nx", 20)), int(cfg.get("nt", 48))
    tf = 2 if cfg.get("pde", "ncde") == "wave" else 4
    return tuple((nx * 2 ** i, nt * tf ** i) for i in range(count))
