import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lsi_certify.certify import certify
from lsi_certify.discretization import build_generator, build_grid
from lsi_certify.flow import (TRACE_COLUMNS, FlowTrace, check_energy_derivative, check_entstar_derivative,
                              check_rothaus, check_variance_derivative, energy_derivative_order,
                              energy_derivative_sides, entropy_star, flow_table, phi_functional, theta_bounds,
                              theta_values, trace_phi, trace_psi)
from lsi_certify.potentials import make_potential
from lsi_certify.samples import bump_profile, random_smooth
from lsi_certify.spectral import decompose

SMALL = build_generator(make_potential("double_well"), build_grid(1, 3.5, 81))


@pytest.fixture(scope="module")
def dw_chain(double_well):
    return certify(double_well.potential, pipeline=double_well, oracle_starts=0).chain


@pytest.fixture(scope="module")
def gaussian_chain(gaussian):
    return certify(gaussian.potential, pipeline=gaussian, K_override=0.1, oracle_starts=0).chain


def test_flow_trace_validation():
    with pytest.raises(ValueError):
        FlowTrace([0.0, 0.0])
    tr = FlowTrace([0.0, 1.0, 3.0], {"a": [3.0, 2.0, 2.0]})
    assert tr.nonincreasing("a")
    np.testing.assert_allclose(tr.slopes("a"), [-1.0, 0.0])
    assert set(tr.derivatives) == {"a"}


def test_phi_constant_is_zero(gaussian):
    tr = trace_phi(gaussian.spectrum, np.full(gaussian.grid.size, 2.0), 1.0, [0, 1, 2])
    np.testing.assert_allclose(tr.values["Phi"], 0.0, atol=1e-14)


def test_phi_decreases_to_zero(gaussian):
    dec = gaussian.spectrum
    f = np.exp(gaussian.grid.x / 2)
    tr = trace_phi(dec, f, 1.0, np.linspace(0, 5, 21))
    assert tr.flags["monotone"]
    assert abs(phi_functional(dec, f, 1.0, 40.0)) < 1e-6 * abs(tr.flags["Phi0"]) + 1e-7


def test_phi_bump_profile(gaussian):
    tr = trace_phi(gaussian.spectrum, bump_profile(gaussian.grid), 1.0, np.linspace(0, 5, 20))
    assert tr.flags["monotone"]


def test_phi_requirements(gaussian, double_well):
    with pytest.raises(ValueError):
        trace_phi(gaussian.spectrum, gaussian.grid.x, 1.0, [0, 1])
    with pytest.raises(ValueError):
        trace_phi(gaussian.spectrum, np.ones(gaussian.grid.size), 0.0, [0, 1])
    with pytest.warns(UserWarning, match="need not be monotone"):
        trace_phi(double_well.spectrum, bump_profile(double_well.grid), 1.0, [0, 1])


def test_psi_constant_is_zero(double_well, dw_chain):
    tr = trace_psi(double_well.spectrum, np.full(double_well.grid.size, 1.7), dw_chain, [1, 2, 5])
    np.testing.assert_allclose(tr.values["Psi"], 0.0, atol=1e-12)


def test_psi_double_well(double_well, dw_chain):
    dec = double_well.spectrum
    tr = trace_psi(dec, 1 + 0.3 * dec.mode(1), dw_chain, np.linspace(1, 10, 19))
    assert tr.flags["monotone"] and tr.flags["start_nonnegative"] and tr.flags["terminal_ok"]


def test_psi_gaussian_forced_chain(gaussian, gaussian_chain):
    tr = trace_psi(gaussian.spectrum, bump_profile(gaussian.grid), gaussian_chain, np.linspace(1, 6, 11))
    assert tr.flags["monotone"] and tr.flags["start_nonnegative"]


def test_psi_rejects_early_times(double_well, dw_chain):
    with pytest.raises(ValueError, match="t0"):
        trace_psi(double_well.spectrum, bump_profile(double_well.grid), dw_chain, [0.5, 1.0])


def test_theta_constant(double_well, dw_chain):
    rep = theta_bounds(double_well.spectrum, np.full(double_well.grid.size, 2.0), dw_chain)
    assert rep.passed
    assert rep.details["theta1"] == pytest.approx(0, abs=1e-12)
    assert rep.details["theta2"] == pytest.approx(0, abs=1e-12)


def test_theta_gaussian_forced_branch(gaussian, gaussian_chain):
    rep = theta_bounds(gaussian.spectrum, np.exp(gaussian.grid.x / 4), gaussian_chain)
    assert rep.passed and rep.worst_margin >= 0


def test_theta_double_well_random(double_well, dw_chain, rng):
    dec = double_well.spectrum
    for _ in range(50):
        f = random_smooth(dec.grid, rng, positive=False)
        rep = theta_bounds(dec, f, dw_chain)
        assert rep.passed, rep
        scale = 1 + abs(rep.details["theta1"]) + abs(rep.details["theta2"])
        assert abs(rep.details["identity_residual"]) <= 1e-10 * scale


def test_theta2_nonnegative(double_well, rng):
    dec = double_well.spectrum
    for t in (0.1, 1.0, 3.0):
        f = random_smooth(dec.grid, rng, positive=False)
        assert theta_values(dec, f, t)[1] >= -1e-14


def test_energy_derivative_closed_form(gaussian):
    dec = gaussian.spectrum
    x = gaussian.grid.x
    for t in (0.25, 1.0):
        lhs, rhs = energy_derivative_sides(dec, x, t)
        assert lhs == pytest.approx(-2 * math.exp(-2 * t), rel=1e-3)
        assert rhs == pytest.approx(-2 * math.exp(-2 * t), rel=1e-3)
    assert check_energy_derivative(dec, x, 0.5).passed


def test_energy_derivative_constant(gaussian):
    lhs, rhs = energy_derivative_sides(gaussian.spectrum, np.ones(gaussian.grid.size), 0.5)
    assert lhs == pytest.approx(0, abs=1e-12) and rhs == 0


def test_energy_derivative_order(double_well, double_well_fine):
    decs = [double_well.spectrum, double_well_fine.spectrum]
    errs, order = energy_derivative_order(decs, [d.mode(2) for d in decs], 0.5)
    assert order >= 1.5
    assert check_energy_derivative(decs[1], decs[1].mode(2), 0.5, scale=10).passed


def test_energy_derivative_needs_positive_time_and_1d(gaussian):
    with pytest.raises(ValueError):
        check_energy_derivative(gaussian.spectrum, gaussian.grid.x, 0.0)
    gen2 = build_generator(make_potential("gaussian", x0=(0, 0), dim=2), build_grid(2, 3, 9))
    with pytest.raises(ValueError):
        energy_derivative_sides(decompose(gen2), np.ones(81), 1.0)


def test_variance_and_entstar_derivatives(double_well, rng):
    dec = double_well.spectrum
    for _ in range(5):
        f = random_smooth(dec.grid, rng)
        assert check_variance_derivative(dec, f, 0.5).passed
        assert check_entstar_derivative(dec, f, 0.5, scale=10).passed


def test_entstar_is_not_renormalized(double_well):
    m = double_well.measure
    phi = np.full(double_well.grid.size, 2.0)
    assert entropy_star(m, phi, 4.0) == pytest.approx(0.0, abs=1e-14)
    assert entropy_star(m, phi, 1.0) == pytest.approx(4 * math.log(4))


def test_rothaus_examples():
    m = SMALL.measure
    f = np.sin(SMALL.grid.x)
    rep = check_rothaus(m, f, 0.0)
    assert rep.passed and rep.worst_margin >= 0
    const = check_rothaus(m, np.full(SMALL.size, 1.5), 2.0)
    assert const.passed


@settings(max_examples=200, deadline=None)
@given(f=arrays(float, 81, elements=st.floats(-5, 5)), a=st.floats(-5, 5))
def test_rothaus_property(f, a):
    assert check_rothaus(SMALL.measure, f, a).passed


def test_flow_table(double_well, dw_chain):
    dec = double_well.spectrum
    rows = flow_table(dec, bump_profile(dec.grid), [0.0, 0.5, 1.0, 2.0], c=0.5, chain=dw_chain)
    assert [tuple(r) for r in rows] == [TRACE_COLUMNS] * 4
    assert rows[0]["Psi"] is None and rows[2]["Psi"] is not None
    assert rows[0]["Theta1"] == pytest.approx(0, abs=1e-14)
    bare = flow_table(dec, dec.mode(1), [0.0, 1.0])
    assert bare[0]["Phi"] is None and bare[0]["Psi"] is None


@pytest.fixture(scope="module")
def double_well_fine():
    from lsi_certify.certify import build_pipeline

    return build_pipeline(make_potential("double_well"), None, 2001)
