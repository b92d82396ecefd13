"""Multi-level stencil coefficients, their Taylor constants and presets.

A scheme is a sparse map ``(k, q) -> a_kq`` (and ``b_kq`` for the source)
with spatial shift ``k`` along each lattice direction and time offset ``q``.
With ``shifted=False`` the updated level sits at ``q = 0`` (so ``q = 0``
terms are implicit); with ``shifted=True`` the updated level is one step
ahead of ``q = 0`` and every term is explicit. The number of time steps
between a term and the updated level is its *lag*: ``-q`` unshifted,
``1 - q`` shifted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import UnknownPreset

__all__ = [
    "SchemeCoefficients",
    "MomentConstants",
    "StencilTargets",
    "EvenOddSplit",
    "PDEReport",
    "three_level",
    "coefficient_moments",
    "solve_three_level",
    "constraint_system",
    "constraint_residual",
    "preset",
    "PRESETS",
    "recovered_pde",
    "split_even_odd",
    "level_sums",
]

Key = tuple[int, int]


def _clean(m: Mapping | None) -> dict[Key, float]:
    if not m:
        return {}
    return {(int(k), int(q)): float(v) for (k, q), v in m.items() if v != 0.0}


@dataclass(frozen=True)
class SchemeCoefficients:
    a: dict = field(default_factory=dict)
    b: dict = field(default_factory=dict)
    shifted: bool = False
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "a", _clean(self.a))
        object.__setattr__(self, "b", _clean(self.b))

    def lag(self, q: int) -> int:
        return 1 - q if self.shifted else -q

    @property
    def levels(self) -> int:
        """Number of past field levels the update reads (``n``).

        Only ``a`` counts: source terms are evaluated from the source
        callback at any time and need no stored level.
        """
        return max((self.lag(q) for _, q in self.a), default=1)

    @property
    def explicit(self) -> bool:
        return all(self.lag(q) >= 1 for _, q in list(self.a) + list(self.b))

    @property
    def max_shift(self) -> int:
        return max((abs(k) for k, _ in list(self.a) + list(self.b)), default=0)

    def by_lag(self, which: str = "a") -> dict[int, dict[int, float]]:
        out: dict[int, dict[int, float]] = {}
        for (k, q), v in getattr(self, which).items():
            out.setdefault(self.lag(q), {})[k] = v
        return out

    def as_dict(self) -> dict:
        fmt = lambda m: {f"{k},{q}": v for (k, q), v in sorted(m.items())}
        return {"name": self.name, "shifted": self.shifted, "a": fmt(self.a), "b": fmt(self.b)}


def three_level(a1=0.0, a0=0.0, am1=0.0, ah1=0.0, ah0=0.0, ahm1=0.0,
                b1=0.0, b0=0.0, bm1=0.0, bh1=0.0, bh0=0.0, bhm1=0.0, name="") -> SchemeCoefficients:
    """Shifted three-level scheme from ``a_k`` (level t) and ``a^_k`` (level t - dt)."""
    a = {(1, 0): a1, (0, 0): a0, (-1, 0): am1, (1, -1): ah1, (0, -1): ah0, (-1, -1): ahm1}
    b = {(1, 0): b1, (0, 0): b0, (-1, 0): bm1, (1, -1): bh1, (0, -1): bh0, (-1, -1): bhm1}
    return SchemeCoefficients(a, b, shifted=True, name=name)


@dataclass(frozen=True)
class MomentConstants:
    A: dict
    B: dict

    def __getitem__(self, key: str) -> float:
        tab = self.A if key[0] == "A" else self.B
        return tab[(int(key[1]), int(key[2]))]


def _taylor(coeffs: Mapping[Key, float], lmax: int) -> dict[tuple[int, int], float]:
    out = {}
    for l in range(lmax + 1):
        for m in range(l + 1):
            s = sum(v * float(q) ** (l - m) * float(k) ** m for (k, q), v in coeffs.items())
            out[(l, m)] = math.comb(l, m) * s / math.factorial(l)
    return out


def coefficient_moments(c: SchemeCoefficients) -> MomentConstants:
    """Taylor constants ``A_lm`` (l <= 3) and ``B_lm`` (l <= 2)."""
    A = _taylor(c.a, 3)
    if c.shifted:
        # left side at t + dt: the unit term moves into A_l0
        for l in range(1, 4):
            A[(l, 0)] -= 1.0 / math.factorial(l)
    B = _taylor(c.b, 2)
    return MomentConstants(A, B)


@dataclass(frozen=True)
class StencilTargets:
    a0: float
    A10: float
    A11: float
    A21: float
    A22: float
    source_targets: tuple | None = None

    def ncde_consistent(self, tol: float = 1e-12) -> bool:
        ok = abs(self.A10 - self.A11) <= tol
        if self.source_targets is not None:
            ok = ok and abs(self.A10 + self.source_targets[0]) <= tol
        return ok


def constraint_system(a0: float, A10: float, A11: float, A21: float, A22: float):
    """Matrix and right side for unknowns ``(a1, a-1, a^0, a^1, a^-1)``."""
    M = np.array([
        [1.0, 1.0, 1.0, 1.0, 1.0],
        [0.0, 0.0, -1.0, -1.0, -1.0],
        [1.0, -1.0, 0.0, 1.0, -1.0],
        [0.0, 0.0, 0.0, -1.0, 1.0],
        [0.5, 0.5, 0.0, 0.5, 0.5],
    ])
    rhs = np.array([1.0 - a0, 1.0 + A10, A11, A21, A22])
    return M, rhs


def solve_three_level(t: StencilTargets, b: Mapping | None = None, name: str = "") -> SchemeCoefficients:
    """Shifted three-level coefficients meeting the targets with free ``a0``.

    Source weights are not solved for; pass them through ``b`` when needed.
    """
    a0, A10, A11, A21, A22 = t.a0, t.A10, t.A11, t.A21, t.A22
    a1 = 0.5 * (-a0 + A10 + A11 + A21 + 2.0)
    am1 = 0.5 * (-a0 + A10 - A11 - A21 + 2.0)
    ah0 = 0.5 * (-2.0 * a0 - 4.0 * A22 + 2.0)
    ah1 = 0.5 * (a0 - A10 - A21 + 2.0 * A22 - 2.0)
    ahm1 = 0.5 * (a0 - A10 + A21 + 2.0 * A22 - 2.0)
    a = {(1, 0): a1, (0, 0): a0, (-1, 0): am1, (1, -1): ah1, (0, -1): ah0, (-1, -1): ahm1}
    return SchemeCoefficients(a, dict(b or {}), shifted=True, name=name)


def constraint_residual(c: SchemeCoefficients, t: StencilTargets) -> float:
    x = np.array([c.a.get(key, 0.0) for key in [(1, 0), (-1, 0), (0, -1), (1, -1), (-1, -1)]])
    M, rhs = constraint_system(t.a0, t.A10, t.A11, t.A21, t.A22)
    return float(np.max(np.abs(M @ x - rhs)))


# -- presets -----------------------------------------------------------------

_SRT_SOURCE = {(-1, 0): 1.5, (-1, -1): -0.5}


def _srt_tau1():
    return three_level(am1=1.0, bm1=1.5, bhm1=-0.5, name="srt_tau1")


def _trt_magic(s_minus: float = 1.0):
    s = float(s_minus)
    return three_level(a1=1.0 - s, am1=1.0, ah0=-(1.0 - s),
                       b0=-(1.0 - s) / 2.0, bh0=-(1.0 - s) / 2.0, bm1=1.5, bhm1=-0.5,
                       name=f"trt_magic(s-={s:g})")


def _simplified_lb(tau: float = 1.0):
    tau = float(tau)
    return three_level(a0=2.0 * (1.0 - tau), a1=tau - 1.0, am1=tau, name=f"simplified_lb(tau={tau:g})")


def _wave(gamma: float = 0.375):
    g = float(gamma)
    return three_level(a0=2.0 * (1.0 - g), a1=g, am1=g, ah0=-1.0, name=f"wave(gamma={g:g})")


def _linear_two_level(ratio: float = 1.0):
    """Two-level scheme with ``a1 + a-1 = ratio = 2 alpha / (dt cs^2)`` and ``A10 = A11 = -1``."""
    r = float(ratio)
    return three_level(a0=1.0 - r, a1=0.5 * (r - 1.0), am1=0.5 * (r + 1.0), name=f"linear_two_level(r={r:g})")


# (A21, a0, A22) per case; Example 3 cases hold gamma
_EXAMPLE_TARGETS = {
    (1, 1): (0.0, 0.0, 0.5),
    (1, 2): (0.0, 0.25, 0.5),
    (1, 3): (0.25, 0.0, 0.5),
    (2, 1): (0.0, 0.0, 0.5),
    (2, 2): (0.25, 0.0, 0.5),
    (2, 3): (0.0, 0.0, 1.0),
}
_EXAMPLE3_GAMMA = {1: 0.375, 2: 0.375, 3: 0.5}


def _example(n: int = 1, case: int = 1):
    n, case = int(n), int(case)
    if n == 3:
        if case not in _EXAMPLE3_GAMMA:
            raise UnknownPreset(f"example 3 has no case {case}")
        w = _wave(_EXAMPLE3_GAMMA[case])
        return SchemeCoefficients(w.a, w.b, True, f"example3_case{case}")
    try:
        A21, a0, A22 = _EXAMPLE_TARGETS[(n, case)]
    except KeyError:
        raise UnknownPreset(f"no preset for example {n} case {case}") from None
    b = _SRT_SOURCE if n == 1 else None
    t = StencilTargets(a0=a0, A10=-1.0, A11=-1.0, A21=A21, A22=A22,
                       source_targets=(1.0, 0.5, -1.0) if b else None)
    return solve_three_level(t, b, name=f"example{n}_case{case}")


PRESETS = {
    "srt_tau1": _srt_tau1,
    "srt": _srt_tau1,
    "trt_magic": _trt_magic,
    "trt": _trt_magic,
    "simplified_lb": _simplified_lb,
    "wave": _wave,
    "linear_two_level": _linear_two_level,
    "example": _example,
}


def preset(name: str, **params) -> SchemeCoefficients:
    """Named coefficient set, e.g. ``preset("trt", s_minus=1.2)``."""
    try:
        fn = PRESETS[name.lower()]
    except KeyError:
        raise UnknownPreset(f"unknown preset {name!r}; known: {sorted(PRESETS)}") from None
    return fn(**params)


# -- analysis ----------------------------------------------------------------

@dataclass
class PDEReport:
    kind: str  # "ncde", "wave" or "inconsistent"
    alpha: float | None
    flags: dict = field(default_factory=dict)
    reasons: list = field(default_factory=list)
    constants: MomentConstants | None = None

    def as_dict(self) -> dict:
        return {"kind": self.kind, "alpha": self.alpha, "flags": self.flags, "reasons": self.reasons}


def recovered_pde(c: SchemeCoefficients, dt: float, beta: float, cs2: float, tol: float = 1e-12) -> PDEReport:
    """Classify the macroscopic equation a scheme recovers at second order."""
    mc = coefficient_moments(c)
    A, B = mc.A, mc.B
    close = lambda x, y: abs(x - y) <= tol * max(1.0, abs(x), abs(y))

    if not close(A[(0, 0)], 1.0):
        return PDEReport("inconsistent", None, {}, [f"A00 = {A[(0, 0)]!r} != 1"], mc)

    if close(A[(1, 0)], A[(1, 1)]) and not close(A[(1, 0)], 0.0):
        alpha = -(A[(2, 2)] / A[(1, 0)]) * dt * beta * cs2
        flags = {
            "source_scaling": close(A[(1, 0)], -B[(0, 0)]),
            "source_time_derivative": close(B[(1, 0)] + A[(2, 0)], 0.0),
        }
        return PDEReport("ncde", alpha, flags, [], mc)

    if all(close(A[key], 0.0) for key in [(1, 0), (1, 1), (2, 1)]) and close(A[(2, 0)], -1.0):
        return PDEReport("wave", A[(2, 2)] * beta * cs2, {}, [], mc)

    reasons = []
    if close(A[(1, 0)], 0.0) and close(A[(1, 1)], 0.0):
        reasons.append(f"A10 = A11 = 0 but A20 = {A[(2, 0)]!r} != -1 or A21 != 0")
    elif not close(A[(1, 0)], A[(1, 1)]):
        reasons.append(f"A10 = {A[(1, 0)]!r} != A11 = {A[(1, 1)]!r}")
    return PDEReport("inconsistent", None, {}, reasons, mc)


@dataclass(frozen=True)
class EvenOddSplit:
    a_plus: dict
    a_minus: dict
    b_plus: dict
    b_minus: dict


def _split(m: Mapping[Key, float]):
    plus, minus = {}, {}
    for k, q in {(abs(k), q) for k, q in m if k != 0}:
        plus[(k, q)] = m.get((k, q), 0.0) + m.get((-k, q), 0.0)
        minus[(k, q)] = m.get((k, q), 0.0) - m.get((-k, q), 0.0)
    return plus, minus


def split_even_odd(c: SchemeCoefficients) -> EvenOddSplit:
    ap, am = _split(c.a)
    bp, bm = _split(c.b)
    return EvenOddSplit(ap, am, bp, bm)


def level_sums(c: SchemeCoefficients, which: str = "a") -> dict[int, float]:
    """``sum_k a_kq`` for each time offset ``q``."""
    out: dict[int, float] = {}
    for (k, q), v in getattr(c, which).items():
        out[q] = out.get(q, 0.0) + v
    return out
