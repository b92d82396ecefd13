"""Quadratic equilibrium and source distributions built from moment targets.

Every distribution here is ``g_j = w_j (A + c~_j . B + Q~_j : C)``; the NCDE,
NSE and wave constructors only choose ``(A, B, C)``. Inputs may be scalars or
fields: ``A`` has the grid shape, ``B`` a leading axis of length ``d`` and
``C`` two leading axes of length ``d``. Outputs carry a leading axis of length
``q``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DegenerateDenominator, LengthMismatch
from .lattice import LatticeModel, lattice_moments

__all__ = [
    "EDFSpec",
    "MomentSet",
    "edf_basis",
    "eval_quadratic_edf",
    "ncde_edf",
    "ncde_spec",
    "convection_diffusion_edf",
    "ncde_source_df",
    "nse_edf",
    "nse_force_df",
    "moments_of",
    "third_moment_identity",
    "even_odd",
]


@dataclass(frozen=True)
class EDFSpec:
    """Moment targets: zeroth ``A``, first ``B`` and second-moment deviation ``C``.

    The generated distribution has moments ``(A, B, A * cs^2 I + C)``.
    ``meta`` records how the targets were assembled (e.g. the ``lam`` toggle
    that includes or drops the ``uu`` term).
    """

    A: object
    B: object = None
    C: object = None
    meta: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class MomentSet:
    m0: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    m3: np.ndarray


@lru_cache(maxsize=64)
def _basis(lat: LatticeModel):
    c = lat.velocities
    cs2 = lat.cs2
    d = lat.dim
    q = lat.num_velocities
    speeds2 = np.array(lat.axis_speeds) ** 2
    gap = speeds2 - cs2
    if np.any(np.abs(gap) <= 1e-14 * speeds2):
        raise DegenerateDenominator(f"c_a^2 equals cs^2 on {lat.name}; d0 must be < 1")
    ct = c / cs2
    Q = np.einsum("ja,jb->jab", c, c) - cs2 * np.eye(d)[None]
    Qt = np.empty((q, d, d))
    for a in range(d):
        for b in range(d):
            if a == b:
                Qt[:, a, a] = Q[:, a, a] / (cs2 * gap[a])
            else:
                Qt[:, a, b] = Q[:, a, b] / (2.0 * cs2 * cs2)
    w = lat.w
    for arr in (ct, Qt, w):
        arr.setflags(write=False)
    return w, ct, Qt


def edf_basis(lat: LatticeModel):
    """Return ``(w, c~, Q~)`` for the lattice (cached, read-only)."""
    return _basis(lat)


def eval_quadratic_edf(lat: LatticeModel, spec: EDFSpec) -> np.ndarray:
    w, ct, Qt = _basis(lat)
    d = lat.dim
    A = np.asarray(spec.A, dtype=float)
    grid = A.shape
    term = np.broadcast_to(A, grid)[None].copy() if grid else np.full((1,), float(A))
    if spec.B is not None:
        B = np.asarray(spec.B, dtype=float)
        if B.shape[:1] != (d,):
            raise LengthMismatch(f"B must have leading axis {d}, got shape {B.shape}")
        term = term + np.tensordot(ct, B, axes=(1, 0))
    if spec.C is not None:
        C = np.asarray(spec.C, dtype=float)
        if C.shape[:2] != (d, d):
            raise LengthMismatch(f"C must have leading axes ({d}, {d}), got shape {C.shape}")
        term = term + np.tensordot(Qt, C, axes=([1, 2], [0, 1]))
    wq = w.reshape((-1,) + (1,) * (term.ndim - 1))
    return wq * term


def _as_vector_field(v, d: int, grid: tuple) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape == (d,):
        return v.reshape((d,) + (1,) * len(grid))
    return v


def _identity_field(d: int, grid: tuple) -> np.ndarray:
    return np.eye(d).reshape((d, d) + (1,) * len(grid))


def ncde_edf(lat: LatticeModel, phi, Bflux, D=None, Cextra=None, beta: float = 1.0) -> np.ndarray:
    """EDF recovering ``d_t phi + div B = div(alpha div D) + S``.

    ``D`` defaults to ``phi I`` and ``Cextra`` to zero.
    """
    return eval_quadratic_edf(lat, ncde_spec(lat, phi, Bflux, D, Cextra, beta))


def ncde_spec(lat: LatticeModel, phi, Bflux, D=None, Cextra=None, beta: float = 1.0) -> EDFSpec:
    phi = np.asarray(phi, dtype=float)
    d = lat.dim
    eye = _identity_field(d, phi.shape)
    if D is None:
        D = eye * phi
    C = beta * lat.cs2 * np.asarray(D, dtype=float) - lat.cs2 * phi * eye
    if Cextra is not None:
        C = C + np.asarray(Cextra, dtype=float)
    return EDFSpec(phi, _as_vector_field(Bflux, d, phi.shape), C, {"kind": "ncde", "beta": beta})


def convection_diffusion_edf(lat: LatticeModel, phi, u, beta: float = 1.0, lam: int = 1, D0=None) -> np.ndarray:
    """EDF for ``B = phi u``, ``D = phi D0`` and ``Cextra = lam * phi u u``.

    ``lam = 1`` keeps the quadratic velocity term used in the convergence
    examples; ``lam = 0`` gives the EDF linear in ``u`` used for the
    closed-form stability bounds.
    """
    phi = np.asarray(phi, dtype=float)
    d = lat.dim
    uf = _as_vector_field(u, d, phi.shape)
    D = None if D0 is None else np.asarray(D0, dtype=float).reshape((d, d) + (1,) * phi.ndim) * phi
    Cextra = lam * np.einsum("a...,b...->ab...", uf, uf) * phi if lam else None
    spec = ncde_spec(lat, phi, uf * phi, D, Cextra, beta)
    return eval_quadratic_edf(lat, spec)


def ncde_source_df(lat: LatticeModel, S, M1F=None) -> np.ndarray:
    """Source distribution ``F_j = w_j (S + c_j . M1F / cs^2)``."""
    S = np.asarray(S, dtype=float)
    B = None if M1F is None else _as_vector_field(M1F, lat.dim, S.shape)
    return eval_quadratic_edf(lat, EDFSpec(S, B, None, {"kind": "ncde_source"}))


def nse_edf(lat: LatticeModel, rho, u, rho0=None) -> np.ndarray:
    """NSE equilibrium with moments ``(rho, rho0 u, rho0 u u + cs^2 rho I)``.

    ``rho0=None`` uses ``rho`` itself; passing a reference density gives the
    incompressible (He-Luo) variant.
    """
    rho = np.asarray(rho, dtype=float)
    d = lat.dim
    uf = _as_vector_field(u, d, rho.shape)
    r0 = rho if rho0 is None else np.asarray(rho0, dtype=float)
    B = r0 * uf
    C = r0 * np.einsum("a...,b...->ab...", uf, uf)
    return eval_quadratic_edf(lat, EDFSpec(rho, B, C, {"kind": "nse"}))


def nse_force_df(lat: LatticeModel, S, F, M2F) -> np.ndarray:
    """Force distribution with moments ``(S, F, M2F)``."""
    S = np.asarray(S, dtype=float)
    d = lat.dim
    eye = _identity_field(d, S.shape)
    C = np.asarray(M2F, dtype=float) - lat.cs2 * S * eye
    return eval_quadratic_edf(lat, EDFSpec(S, _as_vector_field(F, d, S.shape), C, {"kind": "nse_force"}))


def moments_of(values, lat: LatticeModel) -> MomentSet:
    """Zeroth to third velocity moments by direct summation over directions."""
    g = np.asarray(values, dtype=float)
    if g.shape[:1] != (lat.num_velocities,):
        raise LengthMismatch(f"expected {lat.num_velocities} directions, got shape {g.shape}")
    c = lat.velocities
    m0 = g.sum(axis=0)
    m1 = np.einsum("ja,j...->a...", c, g)
    m2 = np.einsum("ja,jb,j...->ab...", c, c, g)
    m3 = np.einsum("ja,jb,jg,j...->abg...", c, c, c, g)
    return MomentSet(m0, m1, m2, m3)


def third_moment_identity(lat: LatticeModel, B) -> np.ndarray:
    """Closed-form third moment of a quadratic EDF with first moment ``B``."""
    mt = lattice_moments(lat)
    D = mt.delta2
    B = np.asarray(B, dtype=float)
    Bt = B / lat.cs2
    return (
        np.einsum("ab,g->abg", D, B)
        + np.einsum("ag,b->abg", D, B)
        + np.einsum("bg,a->abg", D, B)
        + np.einsum("abgt,t->abg", mt.delta4_aniso, Bt)
    )


def even_odd(values, lat: LatticeModel) -> tuple[np.ndarray, np.ndarray]:
    """Split ``g_j`` into ``(g_j + g_jbar) / 2`` and ``(g_j - g_jbar) / 2``."""
    g = np.asarray(values, dtype=float)
    opp = np.array(lat.opposite)
    gb = g[opp]
    return 0.5 * (g + gb), 0.5 * (g - gb)
