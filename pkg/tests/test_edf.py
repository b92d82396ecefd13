import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mesofd.edf import (
    EDFSpec,
    convection_diffusion_edf,
    eval_quadratic_edf,
    even_odd,
    moments_of,
    ncde_edf,
    ncde_source_df,
    nse_edf,
    nse_force_df,
    third_moment_identity,
)
from mesofd.errors import DegenerateDenominator, LengthMismatch
from mesofd.lattice import build_lattice, lattice_moments, standard_lattice

from conftest import random_lattice


def _random_spec(rng, lat, shape=(3, 2)):
    d = lat.dim
    A = rng.normal(size=shape)
    B = rng.normal(size=(d,) + shape)
    C = rng.normal(size=(d, d) + shape)
    C = 0.5 * (C + np.swapaxes(C, 0, 1))
    if not lattice_moments(lat).is_fourth_order_product:
        # the minimal lattices cannot carry an arbitrary second moment
        C = np.zeros_like(C)
    return EDFSpec(A, B, C)


def test_moment_round_trip(rng):
    worst = 0.0
    for _ in range(1000):
        lat = random_lattice(rng, cs2=rng.uniform(0.3, 2.0))
        spec = _random_spec(rng, lat)
        m = moments_of(eval_quadratic_edf(lat, spec), lat)
        d = lat.dim
        eye = np.eye(d).reshape(d, d, 1, 1)
        worst = max(
            worst,
            np.max(np.abs(m.m0 - spec.A)),
            np.max(np.abs(m.m1 - spec.B)),
            np.max(np.abs(m.m2 - (spec.A * lat.cs2 * eye + spec.C))),
        )
    assert worst <= 1e-12


def test_third_moment_identity(rng):
    for name in ("rd2q9", "rd2q5i", "rd2q5ii", "rd3q19", "rd3q7", "rd3q9", "rd3q27"):
        lat = random_lattice(rng, name)
        B = rng.normal(size=lat.dim)
        g = eval_quadratic_edf(lat, EDFSpec(np.array(0.7), B, None))
        np.testing.assert_allclose(moments_of(g, lat).m3, third_moment_identity(lat, B), atol=1e-12)


def test_d2q9_matches_bgk_equilibrium():
    lat = standard_lattice("rd2q9")
    rho, u = 1.3, np.array([0.1, -0.05])
    cu = lat.velocities @ u
    ref = lat.w * rho * (1 + 3 * cu + 4.5 * cu ** 2 - 1.5 * u @ u)
    np.testing.assert_allclose(nse_edf(lat, np.array(rho), u), ref, rtol=1e-14)
    # convection-diffusion EDF with lam = 1 is the same polynomial in phi u
    np.testing.assert_allclose(convection_diffusion_edf(lat, rho, u), ref, rtol=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.5, 2), st.floats(0.1, 3))
def test_ncde_moments(ux, uy, phi, beta):
    lat = standard_lattice("rd2q9", 2.0)
    u = np.array([ux, uy])
    g = ncde_edf(lat, np.array(phi), phi * u, beta=beta)
    m = moments_of(g, lat)
    assert m.m0 == pytest.approx(phi)
    np.testing.assert_allclose(m.m1, phi * u, atol=1e-12)
    np.testing.assert_allclose(m.m2, beta * lat.cs2 * phi * np.eye(2), atol=1e-12)


def test_lam_toggle():
    lat = standard_lattice("rd2q9")
    u = np.array([0.3, 0.2])
    g1 = convection_diffusion_edf(lat, 2.0, u, lam=1)
    g0 = convection_diffusion_edf(lat, 2.0, u, lam=0)
    np.testing.assert_allclose(moments_of(g1, lat).m2 - moments_of(g0, lat).m2, 2.0 * np.outer(u, u), atol=1e-14)


def test_nse_incompressible_variant(rng):
    lat = build_lattice("rd3q19", 1 / 3, 1.0)
    rho = 1 + 0.1 * rng.normal(size=(4,))
    u = 0.1 * rng.normal(size=(3, 4))
    m = moments_of(nse_edf(lat, rho, u, rho0=1.0), lat)
    np.testing.assert_allclose(m.m0, rho, atol=1e-13)
    np.testing.assert_allclose(m.m1, u, atol=1e-13)
    expect = np.einsum("a...,b...->ab...", u, u) + lat.cs2 * rho * np.eye(3)[..., None]
    np.testing.assert_allclose(m.m2, expect, atol=1e-13)


def test_nse_force_moments(rng):
    lat = standard_lattice("rd3q27")
    S = rng.normal(size=(5,))
    F = rng.normal(size=(3, 5))
    M2 = rng.normal(size=(3, 3, 5))
    M2 = 0.5 * (M2 + M2.transpose(1, 0, 2))
    m = moments_of(nse_force_df(lat, S, F, M2), lat)
    np.testing.assert_allclose(m.m0, S, atol=1e-13)
    np.testing.assert_allclose(m.m1, F, atol=1e-13)
    np.testing.assert_allclose(m.m2, M2, atol=1e-13)


def test_source_distribution():
    lat = standard_lattice("rd2q5i")
    m = moments_of(ncde_source_df(lat, np.array(2.0), [0.5, -1.0]), lat)
    assert m.m0 == pytest.approx(2.0)
    np.testing.assert_allclose(m.m1, [0.5, -1.0], atol=1e-14)


def test_even_odd_split(rng):
    lat = standard_lattice("rd2q9")
    g = rng.normal(size=(9, 3))
    ev, od = even_odd(g, lat)
    np.testing.assert_allclose(ev + od, g)
    opp = list(lat.opposite)
    np.testing.assert_allclose(ev[opp], ev)
    np.testing.assert_allclose(od[opp], -od)


def test_errors():
    lat = standard_lattice("rd2q9")
    with pytest.raises(LengthMismatch):
        eval_quadratic_edf(lat, EDFSpec(np.ones(3), np.ones((3, 3))))
    with pytest.raises(LengthMismatch):
        eval_quadratic_edf(lat, EDFSpec(np.ones(3), None, np.ones((3, 3))))
    with pytest.raises(LengthMismatch):
        moments_of(np.ones((5, 2)), lat)
    with pytest.raises(DegenerateDenominator):
        eval_quadratic_edf(build_lattice("rd2q9", 1.0, check=False), EDFSpec(np.array(1.0)))
