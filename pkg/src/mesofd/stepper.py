"""Time stepping of explicit multi-level schemes on structured grids.

Only the macroscopic field is stored. Each step rebuilds the equilibrium (and
source) distributions from the stored levels, shifts them along every lattice
direction with ``np.roll`` and sums with the scheme weights. Periodic axes
wrap; Dirichlet axes are rolled too and their boundary nodes are then
overwritten from the exact solution, which is sufficient for ``m = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .edf import convection_diffusion_edf, ncde_source_df
from .errors import (
    ImplicitSchemeUnsupported,
    MissingInitialData,
    NonIntegerStepCount,
    NumericalBlowup,
    TooCoarse,
)
from .lattice import LatticeModel
from .scheme import SchemeCoefficients, recovered_pde

__all__ = [
    "Grid",
    "ProblemSpec",
    "SimulationState",
    "EDFBuilder",
    "RunResult",
    "make_grid",
    "make_edf_builder",
    "initialize",
    "step",
    "central_form_step",
    "macro_field",
    "meso_distributions",
    "run",
    "BLOWUP_LIMIT",
]

BLOWUP_LIMIT = 1e12
PERIODIC = "periodic"
DIRICHLET = "dirichlet_exact"


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid. Periodic axes store ``cells`` nodes, Dirichlet axes ``cells + 1``."""

    lower: tuple
    upper: tuple
    cells: tuple
    boundary: tuple

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def spacing(self) -> tuple:
        return tuple((hi - lo) / n for lo, hi, n in zip(self.lower, self.upper, self.cells))

    @property
    def shape(self) -> tuple:
        return tuple(n if b == PERIODIC else n + 1 for n, b in zip(self.cells, self.boundary))

    @property
    def has_dirichlet(self) -> bool:
        return any(b == DIRICHLET for b in self.boundary)

    def axes(self) -> list[np.ndarray]:
        return [lo + h * np.arange(n) for lo, h, n in zip(self.lower, self.spacing, self.shape)]

    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``(d, *shape)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"))

    def boundary_mask(self) -> np.ndarray:
        """True on the first and last node of every Dirichlet axis."""
        mask = np.zeros(self.shape, dtype=bool)
        for a, b in enumerate(self.boundary):
            if b == DIRICHLET:
                idx = [slice(None)] * self.dim
                for end in (0, -1):
                    idx[a] = end
                    mask[tuple(idx)] = True
        return mask


def make_grid(domain: Sequence[tuple[float, float]], cells, boundary="periodic") -> Grid:
    """Build a grid from per-axis ``(lower, upper)`` bounds.

    ``cells`` and ``boundary`` may be scalars (applied to every axis).

    Raises
    ------
    TooCoarse
        If any axis has fewer than 4 cells.
    """
    d = len(domain)
    cells = (int(cells),) * d if np.isscalar(cells) else tuple(int(n) for n in cells)
    boundary = (boundary,) * d if isinstance(boundary, str) else tuple(boundary)
    if len(cells) != d or len(boundary) != d:
        raise ValueError("cells and boundary must match the domain dimension")
    if min(cells) < 4:
        raise TooCoarse(f"need at least 4 cells per axis, got {cells}")
    for b in boundary:
        if b not in (PERIODIC, DIRICHLET):
            raise ValueError(f"unknown boundary kind {b!r}")
    lo = tuple(float(a) for a, _ in domain)
    hi = tuple(float(b) for _, b in domain)
    return Grid(lo, hi, cells, boundary)


Field = Callable[[np.ndarray, float], np.ndarray]


@dataclass
class ProblemSpec:
    """Macroscopic problem: ``pde`` is ``"ncde"`` or ``"wave"``.

    ``u`` is a constant vector or a callback ``u(X, t) -> (d, *shape)``.
    ``source_flux`` gives the first moment of the source distribution; left
    as ``None`` it is zero. ``initial_rate`` is ``d_t phi`` at ``t = 0``
    (used by the wave first-step formula).
    """

    pde: str
    dt: float
    T: float
    alpha: float
    u: object = None
    beta: float = 1.0
    lam: int = 1
    D0: object = None
    source: Field | None = None
    source_flux: Field | None = None
    exact: Field | None = None
    initial: Callable[[np.ndarray], np.ndarray] | None = None
    initial_rate: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = ""


@dataclass
class EDFBuilder:
    """Rebuilds ``f^eq`` and ``F`` from the macroscopic field."""

    lattice: LatticeModel
    u: object = None
    beta: float = 1.0
    lam: int = 1
    D0: object = None
    source_fn: Field | None = None
    source_flux: Field | None = None

    def velocity(self, X, t):
        if self.u is None:
            return np.zeros(self.lattice.dim)
        return self.u(X, t) if callable(self.u) else np.asarray(self.u, dtype=float)

    def __call__(self, phi, X, t) -> np.ndarray:
        return convection_diffusion_edf(self.lattice, phi, self.velocity(X, t), self.beta, self.lam, self.D0)

    def source(self, X, t) -> np.ndarray | None:
        if self.source_fn is None:
            return None
        S = self.source_fn(X, t)
        M1F = None if self.source_flux is None else self.source_flux(X, t)
        return ncde_source_df(self.lattice, S, M1F)


def make_edf_builder(p: ProblemSpec, lat: LatticeModel) -> EDFBuilder:
    if p.pde == "wave":
        return EDFBuilder(lat, None, p.beta, 0, p.D0, p.source, p.source_flux)
    return EDFBuilder(lat, p.u, p.beta, p.lam, p.D0, p.source, p.source_flux)


@dataclass(frozen=True)
class SimulationState:
    """Ring of ``levels + 1`` fields, oldest first; unfilled slots are ``None``."""

    fields: tuple
    time: float
    step: int
    grid: Grid
    X: np.ndarray = field(repr=False, compare=False, default=None)

    def level(self, lag: int) -> np.ndarray:
        """Field ``lag - 1`` steps before the newest one (``lag = 1`` is the newest)."""
        f = self.fields[-lag]
        if f is None:
            raise MissingInitialData(f"level {lag - 1} steps back is not available")
        return f


def _shift(arr: np.ndarray, k: int, direction) -> np.ndarray:
    """Values at ``x + k c_j dt``, i.e. node offset ``k * direction``."""
    s = tuple(-k * int(e) for e in direction)
    if not any(s):
        return arr
    return np.roll(arr, s, axis=tuple(range(len(s))))


def _check_explicit(c: SchemeCoefficients) -> None:
    # same-level source terms are fine: the source is a known callback
    if any(c.lag(q) < 1 for _, q in c.a):
        raise ImplicitSchemeUnsupported(f"scheme {c.name!r} has same-level terms; only explicit schemes run")


def _apply_dirichlet(phi: np.ndarray, s: SimulationState, p: ProblemSpec, t: float) -> np.ndarray:
    if not s.grid.has_dirichlet:
        return phi
    if p.exact is None:
        raise MissingInitialData("Dirichlet axes need the exact solution for boundary data")
    mask = s.grid.boundary_mask()
    phi[mask] = p.exact(s.X, t)[mask]
    return phi


def _level_terms(s: SimulationState, c: SchemeCoefficients, builder, dt: float):
    """Per lag: (equilibrium, source) distributions at that level's time."""
    a_rows = c.by_lag("a")
    b_rows = c.by_lag("b")
    out = {}
    for lag in sorted(set(a_rows) | set(b_rows), reverse=True):
        t_l = s.time - (lag - 1) * dt
        feq = builder(s.level(lag), s.X, t_l) if lag in a_rows else None
        F = builder.source(s.X, t_l) if lag in b_rows else None
        out[lag] = (feq, F)
    return out


def _direct_sum(s, c, builder, dt) -> np.ndarray:
    lat = builder.lattice
    terms = _level_terms(s, c, builder, dt)
    a_rows, b_rows = c.by_lag("a"), c.by_lag("b")
    lags = sorted(terms, reverse=True)  # oldest level first
    ks = sorted({k for k, _ in list(c.a) + list(c.b)})
    acc = np.zeros(s.grid.shape)
    for j, e in enumerate(lat.directions):
        for k in ks:
            local = None
            for lag in lags:
                feq, F = terms[lag]
                a = a_rows.get(lag, {}).get(k, 0.0)
                b = b_rows.get(lag, {}).get(k, 0.0)
                if a and feq is not None:
                    local = a * feq[j] if local is None else local + a * feq[j]
                if b and F is not None:
                    local = dt * b * F[j] if local is None else local + dt * b * F[j]
            if local is not None:
                acc = acc + _shift(local, k, e)
    return acc


def _advance(s: SimulationState, new: np.ndarray, dt: float) -> SimulationState:
    return SimulationState(s.fields[1:] + (new,), s.time + dt, s.step + 1, s.grid, s.X)


def step(s: SimulationState, c: SchemeCoefficients, p: ProblemSpec, builder) -> SimulationState:
    """One explicit update by direct summation over directions, shifts and levels."""
    _check_explicit(c)
    new = _direct_sum(s, c, builder, p.dt)
    new = _apply_dirichlet(new, s, p, s.time + p.dt)
    return _advance(s, new, p.dt)


def central_form_step(s: SimulationState, c: SchemeCoefficients, p: ProblemSpec, builder) -> SimulationState:
    """Same update written as level sums plus central-difference corrections.

    Uses ``sum_j f_j^eq = phi`` for the bulk term, so it agrees with
    :func:`step` only for builders whose zeroth moment is the field itself.
    """
    _check_explicit(c)
    lat = builder.lattice
    dt = p.dt
    opp = np.array(lat.opposite)
    terms = _level_terms(s, c, builder, dt)
    a_rows, b_rows = c.by_lag("a"), c.by_lag("b")
    acc = np.zeros(s.grid.shape)
    for lag in sorted(terms, reverse=True):
        feq, F = terms[lag]
        arow, brow = a_rows.get(lag, {}), b_rows.get(lag, {})
        if arow:
            acc = acc + sum(arow.values()) * s.level(lag)
        if brow and F is not None:
            acc = acc + dt * sum(brow.values()) * F.sum(axis=0)
        for row, g, scale in ((arow, feq, 1.0), (brow, F, dt)):
            if not row or g is None:
                continue
            gp = 0.5 * (g + g[opp])
            gm = 0.5 * (g - g[opp])
            for k in sorted({abs(k) for k in row if k != 0}):
                ap = row.get(k, 0.0) + row.get(-k, 0.0)
                am = row.get(k, 0.0) - row.get(-k, 0.0)
                for j, e in enumerate(lat.directions):
                    if not any(e):
                        continue
                    if ap:
                        d2 = _shift(gp[j], k, e) - 2.0 * gp[j] + _shift(gp[j], -k, e)
                        acc = acc + 0.5 * scale * ap * d2
                    if am:
                        d1 = _shift(gm[j], k, e) - _shift(gm[j], -k, e)
                        acc = acc + 0.5 * scale * am * d1
    acc = _apply_dirichlet(acc, s, p, s.time + dt)
    return _advance(s, acc, dt)


def macro_field(s: SimulationState) -> np.ndarray:
    return s.fields[-1]


def meso_distributions(s: SimulationState, c: SchemeCoefficients, builder, dt: float) -> np.ndarray:
    """Distributions ``f_j`` whose sum produced the newest level.

    Rebuilt from the levels behind the newest one, so the state must have
    been stepped at least once (or fully initialized). On Dirichlet nodes the
    sum differs from the stored boundary data.
    """
    prev = SimulationState((None,) + s.fields[:-1], s.time - dt, s.step - 1, s.grid, s.X)
    lat = builder.lattice
    terms = _level_terms(prev, c, builder, dt)
    a_rows, b_rows = c.by_lag("a"), c.by_lag("b")
    out = np.zeros((lat.num_velocities,) + s.grid.shape)
    for lag in sorted(terms, reverse=True):
        feq, F = terms[lag]
        for row, g, scale in ((a_rows.get(lag, {}), feq, 1.0), (b_rows.get(lag, {}), F, dt)):
            if g is None:
                continue
            for k, v in sorted(row.items()):
                for j, e in enumerate(lat.directions):
                    out[j] += scale * v * _shift(g[j], k, e)
    return out


# -- initialization and driver ----------------------------------------------

def _initial_level(p: ProblemSpec, X) -> np.ndarray:
    if p.initial is not None:
        return np.array(p.initial(X), dtype=float)
    if p.exact is not None:
        return np.array(p.exact(X, 0.0), dtype=float)
    raise MissingInitialData("need an initial condition or an exact solution")


def _taylor_level(p: ProblemSpec, g: Grid, X, phi0) -> np.ndarray:
    """``phi0 + dt phi_t + dt^2/2 * alpha * lap(phi0)`` with a 3-point Laplacian."""
    dt = p.dt
    lap = np.zeros_like(phi0)
    for a, h in enumerate(g.spacing):
        lap += (np.roll(phi0, 1, axis=a) - 2.0 * phi0 + np.roll(phi0, -1, axis=a)) / h ** 2
    return phi0 + dt * np.asarray(p.initial_rate(X), dtype=float) + 0.5 * dt * dt * p.alpha * lap


def initialize(p: ProblemSpec, g: Grid, c: SchemeCoefficients, builder=None, method: str = "auto") -> tuple[SimulationState, str]:
    """Fill the levels a scheme reads before its first step.

    ``method`` is ``"auto"``, ``"taylor"`` (wave first-step formula),
    ``"exact"`` or ``"bootstrap"`` (step with the missing older level
    replaced by the initial one). ``auto`` prefers taylor for the wave
    equation, then exact. Returns the state and the method used.
    """
    X = g.coords()
    n = max(c.levels, 1)
    phi0 = _initial_level(p, X)
    s = SimulationState((None,) * n + (phi0,), 0.0, 0, g, X)
    if n == 1:
        return s, "single_level"
    if method == "auto":
        if p.pde == "wave" and p.initial_rate is not None:
            method = "taylor"
        elif p.exact is not None:
            method = "exact"
        else:
            method = "bootstrap"
    if method == "exact":
        if p.exact is None:
            raise MissingInitialData("exact initialization needs an exact solution")
        levels = [np.array(p.exact(X, i * p.dt), dtype=float) for i in range(n)]
        return SimulationState((None,) + tuple(levels), (n - 1) * p.dt, 0, g, X), method
    if method == "taylor":
        if p.initial_rate is None or n != 2:
            raise MissingInitialData("taylor start needs d_t phi at t = 0 and a three-level scheme")
        phi1 = _apply_dirichlet(_taylor_level(p, g, X, phi0), s, p, p.dt)
        return SimulationState((None, phi0, phi1), p.dt, 0, g, X), method
    if method == "bootstrap":
        if builder is None:
            raise MissingInitialData("bootstrap start needs an EDF builder")
        fields = (None,) + (phi0,) * n
        cur = SimulationState(fields, 0.0, 0, g, X)
        for _ in range(n - 1):
            cur = step(cur, c, p, builder)
        return SimulationState(cur.fields, cur.time, 0, g, X), method
    raise ValueError(f"unknown initialization method {method!r}")


@dataclass
class RunResult:
    field: np.ndarray
    state: SimulationState
    times: list
    max_abs: list
    mass: list
    gre: list
    blowup: bool
    meta: dict

    @property
    def final_gre(self) -> float:
        if self.blowup:
            return float("inf")
        return self.gre[-1] if self.gre else float("nan")


def _check_setup(p: ProblemSpec, c: SchemeCoefficients, g: Grid, lat: LatticeModel, tol: float = 1e-12):
    _check_explicit(c)
    if g.has_dirichlet and c.max_shift > 1:
        raise ValueError("Dirichlet boundaries support only m = 1 stencils")
    speeds = np.array(g.spacing) / p.dt
    if not np.allclose(speeds, lat.axis_speeds, rtol=tol, atol=0.0):
        raise ValueError(f"lattice speeds {lat.axis_speeds} do not match dx/dt = {tuple(speeds)}")
    rep = recovered_pde(c, p.dt, p.beta, lat.cs2)
    if rep.kind != p.pde:
        raise ValueError(f"scheme recovers {rep.kind!r}, problem is {p.pde!r}")
    if abs(rep.alpha - p.alpha) > tol * max(abs(p.alpha), 1e-300):
        raise ValueError(f"scheme gives alpha = {rep.alpha!r}, problem has {p.alpha!r}")


def run(p: ProblemSpec, c: SchemeCoefficients, g: Grid, builder, init: str = "auto",
        raise_on_blowup: bool = False, check: bool = True) -> RunResult:
    """Initialize and step to ``T``, recording diagnostics after every step.

    Stops early (``blowup=True``) once ``max |phi|`` exceeds ``BLOWUP_LIMIT``
    or turns non-finite.
    """
    from .harness import gre as _gre

    nsteps = p.T / p.dt
    if abs(nsteps - round(nsteps)) > 1e-9:
        raise NonIntegerStepCount(f"T / dt = {nsteps!r} is not an integer")
    nsteps = int(round(nsteps))
    if check:
        _check_setup(p, c, g, builder.lattice)
    s, method = initialize(p, g, c, builder, init)
    times, max_abs, mass, gres = [], [], [], []
    inner = ~g.boundary_mask()

    def record(st):
        phi = macro_field(st)
        times.append(st.time)
        max_abs.append(float(np.max(np.abs(phi))))
        mass.append(float(phi.sum()))
        if p.exact is not None:
            # boundary nodes carry exact data; measure the computed nodes only
            gres.append(_gre(phi[inner], p.exact(st.X, st.time)[inner]))

    record(s)
    blowup = False
    done = int(round(s.time / p.dt))
    for _ in range(done, nsteps):
        s = step(s, c, p, builder)
        phi = macro_field(s)
        m = float(np.max(np.abs(phi)))
        if not np.isfinite(m) or m > BLOWUP_LIMIT:
            blowup = True
            times.append(s.time)
            max_abs.append(m)
            mass.append(float(phi.sum()))
            if raise_on_blowup:
                raise NumericalBlowup(f"max |phi| = {m:g} at t = {s.time:g}")
            break
        record(s)
    meta = {"init": method, "steps": s.step, "nsteps": nsteps, "scheme": c.name, "problem": p.name}
    return RunResult(macro_field(s), s, times, max_abs, mass, gres, blowup, meta)
