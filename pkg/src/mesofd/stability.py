"""Von Neumann analysis of multi-level schemes with frozen linear EDFs.

With ``f_j^eq = phi * u_j`` and Fourier mode ``exp(i x . theta / dx)``, a shift
of ``k`` along direction ``j`` becomes ``exp(i k xi_j)`` with
``xi_j = dir_j . theta``. Summing over directions gives one complex amplitude
per time level, and the amplification factors are the roots of

    p(lam) = lam^n - sum_l p_{-l} lam^(n-l),   p_{-l} = A_{-l} / (1 - A_0).

Amplitudes are keyed by ``-lag`` so that ``A[-1]`` multiplies the newest
stored level and ``A[0]`` is the implicit (same-level) part.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .edf import EDFSpec, edf_basis
from .errors import NonlinearEDF, SingularDenominator, ThetaOutOfRange, WrongShape
from .lattice import LatticeModel, lattice_kind
from .scheme import SchemeCoefficients

__all__ = [
    "SymbolDecomposition",
    "StabilityReport",
    "linear_edf_spec",
    "symbol_decomposition",
    "level_amplitudes",
    "amplification_roots",
    "two_level_explicit_check",
    "theta_scheme_check",
    "three_level_check",
    "trt_condition",
    "linear_edf_bounds",
    "spectral_scan",
    "wavenumber_grid",
]

TOL = 1e-10


@dataclass(frozen=True)
class SymbolDecomposition:
    """Even and odd parts of the frozen EDF weights, one entry per direction.

    ``u_plus[j] + u_minus[j]`` is the weight ``f_j^eq / phi``; the rest
    direction (if any) has ``u_minus = 0`` and its ``u_plus`` is
    ``omega0_plus``.
    """

    directions: np.ndarray
    u_plus: np.ndarray
    u_minus: np.ndarray
    omega0_plus: float

    @property
    def moving(self) -> np.ndarray:
        return np.any(self.directions != 0, axis=1)


@dataclass
class StabilityReport:
    verdict: str  # "stable", "unstable" or "conditionally_stable"
    condition_results: dict = field(default_factory=dict)
    max_modulus: float | None = None
    witness: np.ndarray | None = None

    @property
    def stable(self) -> bool:
        return self.verdict != "unstable"

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "conditions": {k: {kk: _jsonable(vv) for kk, vv in v.items()} for k, v in self.condition_results.items()},
            "max_modulus": self.max_modulus,
            "witness": None if self.witness is None else [float(x) for x in self.witness],
        }


def _jsonable(v):
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def linear_edf_spec(lat: LatticeModel, u, beta: float = 1.0, D0=None, lam: int = 0) -> EDFSpec:
    """Frozen EDF targets at ``phi = 1``: ``B = u``, ``C = cs^2 (beta D0 - I) + lam u u``.

    ``lam = 0`` with ``D0 = I`` and ``beta = 1`` is the linear EDF
    (``u_j^+ = w_j``).
    """
    d = lat.dim
    u = np.asarray(u, dtype=float).reshape(d)
    D0 = np.eye(d) if D0 is None else np.asarray(D0, dtype=float).reshape(d, d)
    C = lat.cs2 * (beta * D0 - np.eye(d)) + lam * np.outer(u, u)
    return EDFSpec(1.0, u, C, {"kind": "linear", "lam": lam, "beta": beta})


def symbol_decomposition(lat: LatticeModel, edf: EDFSpec) -> SymbolDecomposition:
    """Split a constant-coefficient EDF into ``u_j^+`` and ``u_j^-``.

    Raises
    ------
    NonlinearEDF
        If the zeroth moment is zero or not a scalar, or ``B``/``C`` vary in
        space (the weights would then not be proportional to one scalar).
    """
    A = np.asarray(edf.A, dtype=float)
    d = lat.dim
    if A.ndim != 0 or A == 0.0:
        raise NonlinearEDF("EDF must have a nonzero scalar zeroth moment")
    B = np.zeros(d) if edf.B is None else np.asarray(edf.B, dtype=float)
    C = np.zeros((d, d)) if edf.C is None else np.asarray(edf.C, dtype=float)
    if B.shape != (d,) or C.shape != (d, d):
        raise NonlinearEDF("B and C must be constant (shapes (d,) and (d, d))")
    w, ct, Qt = edf_basis(lat)
    plus = w * (1.0 + np.einsum("jab,ab->j", Qt, C) / A)
    minus = w * (ct @ B) / A
    dirs = lat.dir_array
    rest = lat.rest_index
    w0 = float(plus[rest]) if rest is not None else 0.0
    return SymbolDecomposition(dirs, plus, minus, w0)


def _phases(dec: SymbolDecomposition, xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    d = dec.directions.shape[1]
    if xi.shape[:1] != (d,):
        raise WrongShape(f"wavenumber must have leading axis {d}, got {xi.shape}")
    return np.tensordot(dec.directions, xi, axes=(1, 0))  # (q, ...)


def level_amplitudes(c: SchemeCoefficients, dec: SymbolDecomposition, xi) -> dict[int, np.ndarray]:
    """Complex amplitude ``A_{-lag}`` of every time level at wavenumber(s) ``xi``.

    ``xi`` has shape ``(d,)`` or ``(d, ...)``; results broadcast accordingly.
    """
    ph = _phases(dec, xi)
    up = dec.u_plus.reshape((-1,) + (1,) * (ph.ndim - 1))
    um = dec.u_minus.reshape(up.shape)
    out: dict[int, np.ndarray] = {}
    for lag, row in sorted(c.by_lag("a").items()):
        acc = np.zeros(ph.shape[1:], dtype=complex)
        for k, a in sorted(row.items()):
            acc = acc + a * np.sum(up * np.cos(k * ph) + 1j * um * np.sin(k * ph), axis=0)
        out[-lag] = acc
    return out


def _poly_coeffs(c: SchemeCoefficients, amps: dict[int, np.ndarray]) -> list[np.ndarray]:
    """``p_{-1}, ..., p_{-n}`` from the level amplitudes."""
    n = max(c.levels, 1)
    A0 = amps.get(0, 0.0)
    den = 1.0 - A0
    if np.any(np.abs(den) < 1e-14):
        raise SingularDenominator("1 - A_0 vanishes; the implicit level is singular")
    shape = np.shape(next(iter(amps.values()))) if amps else ()
    return [np.broadcast_to(amps.get(-l, 0.0) / den, shape) for l in range(1, n + 1)]


def _companion_roots(p: list[np.ndarray]) -> np.ndarray:
    """Roots of ``lam^n - sum p_l lam^(n-l)``; shape ``(..., n)``."""
    n = len(p)
    shape = np.shape(p[0])
    if n == 1:
        return np.asarray(p[0], dtype=complex)[..., None]
    M = np.zeros(shape + (n, n), dtype=complex)
    for l in range(n):
        M[..., 0, l] = p[l]
    for i in range(1, n):
        M[..., i, i - 1] = 1.0
    return np.linalg.eigvals(M)


def amplification_roots(c: SchemeCoefficients, dec: SymbolDecomposition, xi) -> np.ndarray:
    """Roots of the characteristic polynomial, sorted by descending modulus.

    For an array of wavenumbers the last axis indexes the roots.
    """
    p = _poly_coeffs(c, level_amplitudes(c, dec, xi))
    roots = _companion_roots(p)
    order = np.argsort(-np.abs(roots), axis=-1, kind="stable")
    return np.take_along_axis(roots, order, axis=-1)


def wavenumber_grid(d: int, resolution: int) -> np.ndarray:
    """Uniform grid on ``[-pi, pi]^d``, flattened to shape ``(d, resolution**d)``."""
    ax = np.linspace(-np.pi, np.pi, resolution)
    mesh = np.meshgrid(*([ax] * d), indexing="ij")
    return np.stack([m.ravel() for m in mesh])


def spectral_scan(c: SchemeCoefficients, dec: SymbolDecomposition, resolution: int = 64):
    """Largest root modulus over a uniform wavenumber grid and where it occurs."""
    if resolution < 8:
        raise ValueError("resolution must be at least 8")
    xi = wavenumber_grid(dec.directions.shape[1], resolution)
    p = _poly_coeffs(c, level_amplitudes(c, dec, xi))
    mod = np.abs(_companion_roots(p)).max(axis=-1)
    i = int(np.argmax(mod))
    return float(mod[i]), xi[:, i].copy()


def _pairs(c: SchemeCoefficients):
    """``{k: (a_k + a_-k, a_k - a_-k)}`` for k >= 1 of a one-level scheme."""
    rows = c.by_lag("a")
    if set(rows) != {1}:
        raise WrongShape(f"expected a single explicit level, got lags {sorted(rows)}")
    row = rows[1]
    ks = sorted({abs(k) for k in row if k != 0})
    return row, {k: (row.get(k, 0.0) + row.get(-k, 0.0), row.get(k, 0.0) - row.get(-k, 0.0)) for k in ks}


def two_level_explicit_check(c: SchemeCoefficients, dec: SymbolDecomposition, tol: float = 1e-12) -> StabilityReport:
    """Closed-form positivity, sum and ratio conditions for a two-level explicit scheme.

    Terms with ``(a_k + a_-k) u_j^+ = 0`` are skipped in the ratio sum when
    their odd partner vanishes too; a zero even term with a nonzero odd term
    fails the positivity condition.
    """
    row, pairs = _pairs(c)
    mov = dec.moving
    up, um = dec.u_plus[mov], dec.u_minus[mov]
    even_min = np.inf
    total = 0.0
    ratio = 0.0
    positive = True
    for k, (ap, am) in pairs.items():
        ev = ap * up
        od = am * um
        even_min = min(even_min, float(ev.min()))
        total += float(ev.sum())
        pos = ev > tol
        zero_ok = (np.abs(ev) <= tol) & (np.abs(od) <= tol)
        positive &= bool(np.all(pos | zero_ok))
        ratio += float(np.sum(od[pos] ** 2 / ev[pos]))
    consistent = abs(sum(row.values()) - 1.0) <= 1e-12
    res = {
        "consistency": {"ok": consistent, "value": sum(row.values())},
        "positivity": {"ok": positive, "value": even_min},
        "sum_bound": {"ok": total <= 1.0 + tol, "value": total},
        "ratio_bound": {"ok": ratio <= 1.0 + tol, "value": ratio},
    }
    ok = all(v["ok"] for v in res.values())
    return StabilityReport("stable" if ok else "unstable", res)


def _theta_symbol(c: SchemeCoefficients, dec: SymbolDecomposition, xi):
    """``A + iB`` of the theta form: the explicit amplitude minus one."""
    _pairs(c)
    return level_amplitudes(c, dec, xi)[-1] - 1.0


def theta_scheme_check(c: SchemeCoefficients, dec: SymbolDecomposition, theta: float,
                       resolution: int = 64) -> StabilityReport:
    """Two-level theta scheme: ``theta`` weights the old level, ``1 - theta`` the new.

    ``theta <= 1/2`` with the positivity condition is unconditionally stable;
    otherwise ``|lam|^2 - 1`` is scanned over wavenumbers.
    """
    if not 0.0 <= theta <= 1.0:
        raise ThetaOutOfRange(f"theta must lie in [0, 1], got {theta}")
    pos = two_level_explicit_check(c, dec).condition_results["positivity"]
    xi = wavenumber_grid(dec.directions.shape[1], resolution)
    Z = _theta_symbol(c, dec, xi)
    den = np.abs(1.0 - (1.0 - theta) * Z) ** 2
    excess = (2.0 * Z.real + (2.0 * theta - 1.0) * np.abs(Z) ** 2) / den
    i = int(np.argmax(excess))
    mod = float(np.sqrt(max(1.0 + excess[i], 0.0)))
    res = {
        "positivity": pos,
        "theta_le_half": {"ok": theta <= 0.5, "value": theta},
        "scan": {"ok": bool(excess[i] <= TOL), "value": float(excess[i])},
    }
    if theta <= 0.5 and pos["ok"]:
        verdict = "stable"
    elif excess[i] <= TOL:
        verdict = "conditionally_stable"
    else:
        verdict = "unstable"
    return StabilityReport(verdict, res, mod, xi[:, i].copy())


def three_level_check(p0: complex, p1: complex, tol: float = TOL) -> bool:
    """Whether both roots of ``lam^2 - p1 lam - p0`` satisfy ``|lam| <= 1``.

    For ``|p0| < 1`` this is ``|p1 + conj(p1) p0| <= 1 - |p0|^2``. On
    ``|p0| = 1`` that inequality is not sufficient (e.g. ``p1 = 3, p0 = -1``),
    and the reduced test ``p1 + p0 conj(p1) = 0, |p1| <= 2`` is used instead.
    """
    p0, p1 = complex(p0), complex(p1)
    m0 = abs(p0)
    if m0 > 1.0 + tol:
        return False
    if abs(m0 - 1.0) <= tol:
        return abs(p1 + p0 * p1.conjugate()) <= 10 * tol and abs(p1) <= 2.0 + tol
    return abs(p1 + p1.conjugate() * p0) <= 1.0 - m0 * m0 + tol


def trt_condition(dec: SymbolDecomposition, xi=None, resolution: int = 64) -> StabilityReport:
    """``A^2 + B^2 <= 1`` with ``A = sum u_j^+ cos xi_j``, ``B = sum u_j^- sin xi_j``.

    Evaluated at ``xi`` when given, otherwise over a wavenumber scan. The
    sufficient global condition is reported alongside.
    """
    d = dec.directions.shape[1]
    pts = wavenumber_grid(d, resolution) if xi is None else np.asarray(xi, dtype=float).reshape(d, -1)
    ph = _phases(dec, pts)
    A = dec.u_plus @ np.cos(ph)
    B = dec.u_minus @ np.sin(ph)
    s = A * A + B * B
    i = int(np.argmax(s))
    mov = dec.moving
    up, um = dec.u_plus[mov], dec.u_minus[mov]
    pos = up > 0
    zero_ok = (up == 0) & (um == 0)
    ratio = float(np.sum(um[pos] ** 2 / up[pos]))
    res = {
        "necessary_sufficient": {"ok": bool(s[i] <= 1.0 + TOL), "value": float(s[i])},
        "sufficient_positivity": {"ok": bool(dec.omega0_plus >= 0 and np.all(pos | zero_ok)),
                                  "value": float(min(dec.omega0_plus, up.min()))},
        "sufficient_ratio": {"ok": ratio <= 1.0 + TOL, "value": ratio},
    }
    verdict = "stable" if res["necessary_sufficient"]["ok"] else "unstable"
    return StabilityReport(verdict, res, float(np.sqrt(s[i])), pts[:, i].copy())


def linear_edf_bounds(lat: LatticeModel, u, alpha: float, dt: float, tol: float = 1e-12) -> StabilityReport:
    """``|u|^2 <= 2 alpha / dt <= cs^2 / (1 - w0)`` for the m = 1 two-level scheme.

    Axis lattices also report ``sum_j 2 alpha dt / dx_j^2 <= 1`` and corner
    lattices the same sum against ``d``.
    """
    u = np.asarray(u, dtype=float)
    rest = lat.rest_index
    w0 = float(lat.w[rest]) if rest is not None else 0.0
    g = 2.0 * alpha / dt
    cap = lat.cs2 / (1.0 - w0)
    u2 = float(u @ u)
    res = {
        "advection": {"ok": u2 <= g * (1 + tol), "value": u2, "bound": g},
        "diffusion": {"ok": g <= cap * (1 + tol), "value": g, "bound": cap},
    }
    kind = lattice_kind(lat)
    if kind in ("axis", "corner"):
        dx = np.asarray(lat.axis_speeds) * dt
        s = float(np.sum(2.0 * alpha * dt / dx ** 2))
        bound = 1.0 if kind == "axis" else float(lat.dim)
        res["mesh_ratio"] = {"ok": s <= bound * (1 + tol), "value": s, "bound": bound}
    ok = res["advection"]["ok"] and res["diffusion"]["ok"]
    return StabilityReport("stable" if ok else "unstable", res)
