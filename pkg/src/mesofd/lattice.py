"""Rectangular rDdQq lattice models and their moment tensors.

Velocities are kept as integer direction tuples; the physical velocity of
direction ``j`` along axis ``a`` is ``directions[j][a] * axis_speeds[a]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import AnisotropicSoundSpeed, UnknownLattice, WeightOutOfRange

__all__ = [
    "LatticeModel",
    "MomentTensors",
    "Check",
    "LatticeReport",
    "CATALOG",
    "build_lattice",
    "standard_lattice",
    "lattice_moments",
    "validate_lattice",
    "drop_rest",
]


@dataclass(frozen=True)
class LatticeModel:
    name: str
    dim: int
    directions: tuple[tuple[int, ...], ...]
    weights: tuple[float, ...]
    axis_speeds: tuple[float, ...]
    d0: tuple[float, ...]
    cs2: float
    opposite: tuple[int, ...]

    @property
    def num_velocities(self) -> int:
        return len(self.directions)

    @property
    def dir_array(self) -> np.ndarray:
        return np.array(self.directions, dtype=int).reshape(-1, self.dim)

    @property
    def w(self) -> np.ndarray:
        return np.array(self.weights, dtype=float)

    @property
    def velocities(self) -> np.ndarray:
        """Physical velocities, shape ``(q, d)``."""
        return self.dir_array * np.array(self.axis_speeds, dtype=float)

    @property
    def rest_index(self) -> int | None:
        for j, c in enumerate(self.directions):
            if not any(c):
                return j
        return None


@dataclass(frozen=True)
class MomentTensors:
    delta2: np.ndarray
    delta4: np.ndarray
    delta4_aniso: np.ndarray

    @property
    def is_fourth_order_product(self) -> bool:
        """True when the anisotropy tensor has no off-diagonal entries."""
        d = self.delta2.shape[0]
        off = self.delta4_aniso.copy()
        for a in range(d):
            off[a, a, a, a] = 0.0
        scale = max(float(np.max(np.abs(self.delta4))), 1e-300)
        return bool(np.max(np.abs(off)) <= 1e-12 * scale)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    residual: float
    tol: float


@dataclass
class LatticeReport:
    lattice: str
    checks: list[Check] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {
            "lattice": self.lattice,
            "ok": self.ok,
            "checks": [
                {"name": c.name, "passed": c.passed, "residual": c.residual, "tol": c.tol}
                for c in self.checks
            ],
        }


# -- catalog -----------------------------------------------------------------

_AXES_2D = [(0, 0), (1, 0), (0, 1), (-1, 0), (0, -1)]
_DIAG_2D = [(1, 1), (-1, 1), (-1, -1), (1, -1)]
_AXES_3D = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (-1, 0, 0), (0, -1, 0), (0, 0, -1)]
# xy, xz, yz planes in that order; four edges each
_EDGES_3D = [
    (1, 1, 0), (-1, 1, 0), (-1, -1, 0), (1, -1, 0),
    (1, 0, 1), (-1, 0, 1), (-1, 0, -1), (1, 0, -1),
    (0, 1, 1), (0, -1, 1), (0, -1, -1), (0, 1, -1),
]
_CORNERS_3D = [
    (1, 1, 1), (1, 1, -1), (1, -1, 1), (-1, 1, 1),
    (-1, -1, -1), (-1, -1, 1), (-1, 1, -1), (1, -1, -1),
]


def _w_d2q9(d):
    d1, d2 = d
    w0 = (1 - d1) * (1 - d2)
    w1 = d1 * (1 - d2) / 2
    w2 = (1 - d1) * d2 / 2
    w5 = d1 * d2 / 4
    return [w0, w1, w2, w1, w2, w5, w5, w5, w5]


def _w_d2q5i(d):
    d1, d2 = d
    return [1 - d1 - d2, d1 / 2, d2 / 2, d1 / 2, d2 / 2]


def _w_d2q5ii(d):
    d0 = d[0]
    return [1 - d0] + [d0 / 4] * 4


def _w_d3q27(d):
    d1, d2, d3 = d
    w0 = (1 - d1) * (1 - d2) * (1 - d3)
    w1 = d1 * (1 - d2) * (1 - d3) / 2
    w2 = d2 * (1 - d1) * (1 - d3) / 2
    w3 = d3 * (1 - d1) * (1 - d2) / 2
    w7 = d1 * d2 * (1 - d3) / 4
    w11 = d1 * d3 * (1 - d2) / 4
    w15 = d2 * d3 * (1 - d1) / 4
    w19 = d1 * d2 * d3 / 8
    return [w0, w1, w2, w3, w1, w2, w3] + [w7] * 4 + [w11] * 4 + [w15] * 4 + [w19] * 8


def _w_d3q19(d):
    d1, d2, d3 = d
    w0 = 1 - d1 - d2 - d3 + d1 * d2 + d1 * d3 + d2 * d3
    w1 = d1 * (1 - d2 - d3) / 2
    w2 = d2 * (1 - d1 - d3) / 2
    w3 = d3 * (1 - d1 - d2) / 2
    w7, w11, w15 = d1 * d2 / 4, d1 * d3 / 4, d2 * d3 / 4
    return [w0, w1, w2, w3, w1, w2, w3] + [w7] * 4 + [w11] * 4 + [w15] * 4


def _w_d3q9(d):
    d0 = d[0]
    return [1 - d0] + [d0 / 8] * 8


def _w_d3q7(d):
    d1, d2, d3 = d
    return [1 - d1 - d2 - d3, d1 / 2, d2 / 2, d3 / 2, d1 / 2, d2 / 2, d3 / 2]


@dataclass(frozen=True)
class _Entry:
    name: str
    dim: int
    directions: tuple
    weight_fn: Callable[[Sequence[float]], list]
    equal_d0: bool = False
    # minimal axis lattice / 2^d-corner lattice tags used by stability bounds
    kind: str = "full"


CATALOG: dict[str, _Entry] = {
    e.name.lower(): e
    for e in [
        _Entry("rD2Q9", 2, tuple(_AXES_2D + _DIAG_2D), _w_d2q9),
        _Entry("rD2Q5I", 2, tuple(_AXES_2D), _w_d2q5i, kind="axis"),
        _Entry("rD2Q5II", 2, tuple([(0, 0)] + _DIAG_2D), _w_d2q5ii, equal_d0=True, kind="corner"),
        _Entry("rD3Q27", 3, tuple(_AXES_3D + _EDGES_3D + _CORNERS_3D), _w_d3q27),
        _Entry("rD3Q19", 3, tuple(_AXES_3D + _EDGES_3D), _w_d3q19),
        _Entry("rD3Q9", 3, tuple([(0, 0, 0)] + _CORNERS_3D), _w_d3q9, equal_d0=True, kind="corner"),
        _Entry("rD3Q7", 3, tuple(_AXES_3D), _w_d3q7, kind="axis"),
    ]
}
_ALIASES = {"rd2q5": "rd2q5i", "d2q9": "rd2q9", "d2q5": "rd2q5i", "d3q19": "rd3q19",
            "d3q27": "rd3q27", "d3q7": "rd3q7"}


def _entry(name: str) -> _Entry:
    key = name.lower()
    key = _ALIASES.get(key, key)
    try:
        return CATALOG[key]
    except KeyError:
        raise UnknownLattice(f"unknown lattice {name!r}; known: {sorted(CATALOG)}") from None


def lattice_kind(lat: LatticeModel) -> str:
    """``'axis'``, ``'corner'`` or ``'full'`` for catalog lattices."""
    key = lat.name.lower().removesuffix("-norest")
    try:
        return _entry(key).kind
    except UnknownLattice:
        return "full"


def _broadcast(values, dim: int, what: str) -> tuple[float, ...]:
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.size == 1:
        arr = np.repeat(arr, dim)
    if arr.size != dim:
        raise ValueError(f"{what} needs {dim} values, got {arr.size}")
    return tuple(float(v) for v in arr)


def _opposites(directions) -> tuple[int, ...]:
    index = {tuple(c): j for j, c in enumerate(directions)}
    out = []
    for c in directions:
        neg = tuple(-x for x in c)
        out.append(index.get(neg, -1))
    return tuple(out)


def build_lattice(name: str, d0=1.0 / 3.0, axis_speeds=1.0, *, check: bool = True) -> LatticeModel:
    """Construct a catalog lattice from per-axis ``d0`` and speeds ``c_a``.

    Parameters
    ----------
    name : str
        Catalog identifier, case-insensitive (``rD2Q9``, ``rD2Q5I``, ...).
    d0 : float or sequence
        Per-axis ratio ``cs^2 / c_a^2``. A scalar is broadcast.
    axis_speeds : float or sequence
        Per-axis lattice speed ``dx_a / dt``.
    check : bool
        When False the weights are not range-checked, which lets
        :func:`validate_lattice` report on inadmissible parameters.
    """
    e = _entry(name)
    d0 = _broadcast(d0, e.dim, "d0")
    speeds = _broadcast(axis_speeds, e.dim, "axis_speeds")
    if e.equal_d0 and max(d0) - min(d0) > 1e-12 * max(abs(x) for x in d0):
        raise ValueError(f"{e.name} requires equal d0 on every axis, got {d0}")

    cs2_axes = [d * c * c for d, c in zip(d0, speeds)]
    ref = max(abs(x) for x in cs2_axes)
    if max(cs2_axes) - min(cs2_axes) > 1e-12 * ref:
        raise AnisotropicSoundSpeed(f"d0*c^2 differs across axes: {cs2_axes}")

    weights = tuple(float(w) for w in e.weight_fn(d0))
    if check:
        bad = [(j, w) for j, w in enumerate(weights) if w < 0.0 or w > 1.0]
        if bad:
            raise WeightOutOfRange(f"{e.name} with d0={d0}: weights out of [0, 1] at {bad}")

    return LatticeModel(
        name=e.name,
        dim=e.dim,
        directions=e.directions,
        weights=weights,
        axis_speeds=speeds,
        d0=d0,
        cs2=float(np.mean(cs2_axes)),
        opposite=_opposites(e.directions),
    )


def standard_lattice(name: str, c: float = 1.0) -> LatticeModel:
    """Square lattice with ``d0 = 1/3`` on every axis, i.e. ``cs^2 = c^2 / 3``."""
    e = _entry(name)
    return build_lattice(name, [1.0 / 3.0] * e.dim, [c] * e.dim)


def drop_rest(lat: LatticeModel, tol: float = 1e-14) -> LatticeModel:
    """Remove the rest velocity of a lattice whose rest weight vanishes."""
    r = lat.rest_index
    if r is None:
        return lat
    if abs(lat.weights[r]) > tol:
        raise WeightOutOfRange(f"rest weight {lat.weights[r]!r} is not zero")
    keep = [j for j in range(lat.num_velocities) if j != r]
    dirs = tuple(lat.directions[j] for j in keep)
    return LatticeModel(
        name=f"{lat.name}-norest",
        dim=lat.dim,
        directions=dirs,
        weights=tuple(lat.weights[j] for j in keep),
        axis_speeds=lat.axis_speeds,
        d0=lat.d0,
        cs2=lat.cs2,
        opposite=_opposites(dirs),
    )


def isotropic_pair_product(delta2: np.ndarray) -> np.ndarray:
    """``<D2 D2>_{abgt} = D_ab D_gt + D_ag D_bt + D_bg D_at``."""
    return (
        np.einsum("ab,gt->abgt", delta2, delta2)
        + np.einsum("ag,bt->abgt", delta2, delta2)
        + np.einsum("bg,at->abgt", delta2, delta2)
    )


def lattice_moments(lat: LatticeModel) -> MomentTensors:
    c = lat.velocities
    w = lat.w
    delta2 = np.einsum("j,ja,jb->ab", w, c, c)
    delta4 = np.einsum("j,ja,jb,jg,jt->abgt", w, c, c, c, c)
    return MomentTensors(delta2, delta4, delta4 - isotropic_pair_product(delta2))


def closed_form_anisotropy(lat: LatticeModel) -> np.ndarray:
    """Diagonal anisotropy ``cs^2 (c_a^2 - 3 cs^2)`` on the ``aaaa`` entries."""
    d = lat.dim
    out = np.zeros((d,) * 4)
    for a, ca in enumerate(lat.axis_speeds):
        out[a, a, a, a] = lat.cs2 * (ca * ca - 3.0 * lat.cs2)
    return out


def validate_lattice(lat: LatticeModel, tol: float = 1e-12) -> LatticeReport:
    """Check every lattice invariant and report measured residuals."""
    w = lat.w
    dirs = lat.dir_array.astype(float)
    rep = LatticeReport(lat.name)

    rep.checks.append(Check("nonnegative_weights", bool(w.min() >= 0.0), float(max(0.0, -w.min())), 0.0))
    s = abs(float(w.sum()) - 1.0)
    rep.checks.append(Check("weight_sum", s <= tol, s, tol))
    first = float(np.max(np.abs(w @ dirs)))
    rep.checks.append(Check("first_moment", first <= 1e-14, first, 1e-14))

    delta2 = lattice_moments(lat).delta2
    target = lat.cs2 * np.eye(lat.dim)
    second = float(np.max(np.abs(delta2 - target))) / max(abs(lat.cs2), 1e-300)
    rep.checks.append(Check("second_moment", second <= tol, second, tol))

    missing = sum(1 for o in lat.opposite if o < 0)
    rest = lat.rest_index
    rest_ok = rest is None or lat.opposite[rest] == rest
    rep.checks.append(Check("opposites", missing == 0 and rest_ok, float(missing), 0.0))
    return rep
