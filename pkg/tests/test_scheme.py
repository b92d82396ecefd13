import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mesofd.errors import UnknownPreset
from mesofd.scheme import (
    SchemeCoefficients,
    StencilTargets,
    coefficient_moments,
    constraint_residual,
    constraint_system,
    level_sums,
    preset,
    recovered_pde,
    solve_three_level,
    split_even_odd,
    three_level,
)

DT, CS2 = 0.1, 1.0 / 3.0


def _targets_of(c):
    mc = coefficient_moments(c)
    return StencilTargets(c.a.get((0, 0), 0.0), mc["A10"], mc["A11"], mc["A21"], mc["A22"])


def _moment_oracle(c, l, m):
    # A_lm straight from the definition, term by term
    s = 0.0
    for (k, q), v in c.a.items():
        s += v * math.comb(l, m) * q ** (l - m) * k ** m
    s /= math.factorial(l)
    if c.shifted and m == 0 and l >= 1:
        s -= 1.0 / math.factorial(l)
    return s


def test_solver_residual_random(rng):
    worst = 0.0
    for _ in range(1000):
        t = StencilTargets(*rng.uniform(-2, 2, 5))
        worst = max(worst, constraint_residual(solve_three_level(t), t))
    assert worst <= 1e-13


@pytest.mark.parametrize("c", [
    preset("srt"),
    preset("trt", s_minus=1.4),
    preset("trt", s_minus=0.6),
    preset("simplified_lb", tau=0.8),
    preset("simplified_lb", tau=1.7),
    preset("wave", gamma=0.375),
    preset("wave", gamma=0.5),
    preset("linear_two_level", ratio=1.8),
], ids=lambda c: c.name)
def test_presets_reproduced_by_solver(c):
    sol = solve_three_level(_targets_of(c))
    keys = set(sol.a) | set(c.a)
    assert max(abs(sol.a.get(k, 0.0) - c.a.get(k, 0.0)) for k in keys) <= 1e-14


def test_solver_matches_linear_system(rng):
    t = StencilTargets(*rng.uniform(-1, 1, 5))
    M, rhs = constraint_system(t.a0, t.A10, t.A11, t.A21, t.A22)
    x = np.linalg.solve(M, rhs)
    c = solve_three_level(t)
    got = [c.a.get(k, 0.0) for k in [(1, 0), (-1, 0), (0, -1), (1, -1), (-1, -1)]]
    np.testing.assert_allclose(got, x, atol=1e-13)


@given(st.integers(0, 3), st.integers(0, 3))
def test_moments_against_definition(l, m):
    if m > l:
        return
    c = preset("trt", s_minus=1.25)
    key = (l, m)
    assert coefficient_moments(c).A[key] == pytest.approx(_moment_oracle(c, l, m), abs=1e-14)


def test_srt_constants():
    mc = coefficient_moments(preset("srt"))
    assert mc["A00"] == pytest.approx(1.0)
    assert mc["A10"] == mc["A11"] == pytest.approx(-1.0)
    assert mc["A22"] == pytest.approx(0.5)
    assert mc["A21"] == pytest.approx(0.0)
    assert mc["B00"] == pytest.approx(1.0)
    assert mc["B10"] == pytest.approx(0.5)


@pytest.mark.parametrize("s", [0.5, 1.0, 1.3, 1.9])
def test_trt_diffusivity(s):
    rep = recovered_pde(preset("trt", s_minus=s), DT, 1.0, CS2)
    assert rep.kind == "ncde"
    assert rep.alpha == pytest.approx((1 / s - 0.5) * CS2 * DT, rel=1e-12)
    assert rep.flags == {"source_scaling": True, "source_time_derivative": True}


def test_trt_constants(rng):
    # A10 = A11 = -s, A21 = 0 and A22 = 1 - s/2 for the magic TRT family
    for s in rng.uniform(0.1, 1.9, 20):
        mc = coefficient_moments(preset("trt", s_minus=s))
        assert mc["A10"] == pytest.approx(-s) and mc["A11"] == pytest.approx(-s)
        assert mc["A21"] == pytest.approx(0.0, abs=1e-15)
        assert mc["A22"] == pytest.approx(1 - s / 2)


@pytest.mark.parametrize("tau", [0.6, 1.0, 2.5])
def test_simplified_lb_diffusivity(tau):
    rep = recovered_pde(preset("simplified_lb", tau=tau), DT, 1.0, CS2)
    assert rep.alpha == pytest.approx((tau - 0.5) * CS2 * DT, rel=1e-12)


@pytest.mark.parametrize("gamma,beta", [(0.375, 1.0), (0.5, 0.75)])
def test_wave_speed(gamma, beta):
    rep = recovered_pde(preset("wave", gamma=gamma), DT, beta, 4 / 3)
    assert rep.kind == "wave"
    assert rep.alpha == pytest.approx(gamma * beta * 4 / 3)


@pytest.mark.parametrize("n,case", [(n, k) for n in (1, 2, 3) for k in (1, 2, 3)])
def test_example_presets(n, case):
    c = preset("example", n=n, case=case)
    rep = recovered_pde(c, DT, 1.0, CS2)
    assert rep.kind == ("wave" if n == 3 else "ncde")
    if n == 1:
        assert rep.flags["source_scaling"] and rep.flags["source_time_derivative"]
    if n < 3:
        A22 = 1.0 if (n, case) == (2, 3) else 0.5
        assert rep.alpha == pytest.approx(A22 * DT * CS2)


def test_example1_case2_coefficients():
    c = preset("example", n=1, case=2)
    assert c.a[(0, 0)] == 0.25
    assert c.a[(1, -1)] == pytest.approx(0.125)
    assert c.levels == 2


def test_inconsistent_schemes():
    rep = recovered_pde(three_level(a1=0.5, am1=0.4), DT, 1.0, CS2)
    assert rep.kind == "inconsistent"
    assert "A00" in rep.reasons[0]
    rep = recovered_pde(SchemeCoefficients({(1, 0): 0.2, (-1, 0): 0.8}, shifted=True), DT, 1.0, CS2)
    assert rep.kind == "inconsistent"
    assert "A11" in rep.reasons[0]


def test_levels_and_lags():
    c = preset("wave")
    assert c.levels == 2
    assert c.explicit
    assert c.max_shift == 1
    assert sorted(c.by_lag("a")) == [1, 2]
    assert preset("srt").levels == 1  # source terms need no stored level
    unshifted = SchemeCoefficients({(1, -1): 0.5, (-1, -1): 0.5})
    assert unshifted.lag(-1) == 1 and unshifted.levels == 1


def test_even_odd_and_level_sums():
    c = preset("trt", s_minus=1.5)
    sp = split_even_odd(c)
    assert sp.a_plus[(1, 0)] == pytest.approx(c.a[(1, 0)] + c.a[(-1, 0)])
    assert sp.a_minus[(1, 0)] == pytest.approx(c.a[(1, 0)] - c.a[(-1, 0)])
    sums = level_sums(c)
    assert sum(sums.values()) == pytest.approx(1.0)


def test_unknown_preset():
    with pytest.raises(UnknownPreset):
        preset("mrt")
    with pytest.raises(UnknownPreset):
        preset("example", n=4)
