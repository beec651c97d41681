import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lsi_certify.discretization import build_generator, build_grid
from lsi_certify.lyapunov import (LyapunovError, check_indicator_form, check_translya, fit_lyapunov_exponential,
                                  verify_lyapunov)
from lsi_certify.potentials import make_potential
from lsi_certify.samples import random_smooth

FLAT = make_potential("polynomial", {"a2": 1e-300})


def exp_quadratic(pipe, a=0.25):
    return np.exp(a * pipe.grid.x**2)


def test_gaussian_certificate(gaussian):
    cert = verify_lyapunov(gaussian.generator, exp_quadratic(gaussian), 0.25, 0.5)
    assert cert.passed and cert.worst_scaled_margin >= -1e-6
    assert cert.r_star == pytest.approx(np.sqrt(2.0))
    assert cert.min_W == 1.0 and cert.excluded == 2


def test_double_well_certificate(double_well):
    cert = verify_lyapunov(double_well.generator, exp_quadratic(double_well), 0.25, 1.0)
    assert cert.passed and cert.worst_scaled_margin >= -1e-6


def test_gaussian_certificate_too_strong(gaussian):
    with pytest.raises(LyapunovError, match="violated") as info:
        verify_lyapunov(gaussian.generator, exp_quadratic(gaussian), 1.0, 0.5)
    cert = info.value.certificate
    worst = np.argmin(np.where(cert.interior, cert.scaled_margin, np.inf))
    assert abs(gaussian.grid.x[worst]) > 4


def test_verify_rejects_bad_inputs(gaussian):
    gen, W = gaussian.generator, exp_quadratic(gaussian)
    with pytest.raises(LyapunovError):
        verify_lyapunov(gen, -W, 0.25, 0.5)
    with pytest.raises(LyapunovError):
        verify_lyapunov(gen, W, 0.0, 0.5)
    with pytest.raises(LyapunovError):
        verify_lyapunov(gen, W, 0.25, -1.0)
    cert = verify_lyapunov(gen, W, 1.0, 0.5, raise_on_failure=False)
    assert not cert.passed


@settings(max_examples=25, deadline=None)
@given(scale=st.floats(1e-6, 1e6), c=st.floats(0.05, 1.0), b=st.floats(0, 2))
def test_homogeneous_in_W(double_well, scale, c, b):
    gen, W = double_well.generator, exp_quadratic(double_well)
    one = verify_lyapunov(gen, W, c, b, raise_on_failure=False)
    scaled = verify_lyapunov(gen, scale * W, c, b, raise_on_failure=False)
    assert one.passed == scaled.passed
    np.testing.assert_allclose(scaled.scaled_margin, one.scaled_margin, rtol=1e-9,
                               atol=1e-12 * np.abs(one.scaled_margin).max())


def test_fit_gaussian_recovers_continuum_pairs(gaussian):
    for a in (1 / 8, 1 / 4, 3 / 8):
        cert = fit_lyapunov_exponential(gaussian.generator, [a])
        assert cert.c == pytest.approx(2 * a - 4 * a * a)
        assert cert.b == pytest.approx(2 * a, abs=1e-4)
        assert cert.exponent == a


def test_fit_double_well_quarter(double_well):
    cert = fit_lyapunov_exponential(double_well.generator, [0.25], [0.25])
    assert cert.c == 0.25 and cert.b <= 1.0 + 1e-9
    best = fit_lyapunov_exponential(double_well.generator)
    assert best.c >= 0.25 and best.passed


def test_fit_flat_potential_infeasible():
    gen = build_generator(FLAT, build_grid(1, 6.0, 241))
    with pytest.raises(LyapunovError):
        fit_lyapunov_exponential(gen, include_boundary=True)
    with pytest.raises(LyapunovError):
        fit_lyapunov_exponential(gen)


def test_translya(gaussian, double_well, rng):
    for pipe, (c, b) in ((gaussian, (0.25, 0.5)), (double_well, (0.25, 1.0))):
        gen = pipe.generator
        cert = verify_lyapunov(gen, exp_quadratic(pipe), c, b)
        one = check_translya(gen, cert, [np.ones(gen.size)])
        d2 = pipe.grid.x**2
        assert one.worst_margin == pytest.approx(b / c - pipe.measure.mean(d2))
        assert one.passed
        modes = [pipe.spectrum.mode(k) for k in range(20)]
        assert check_translya(gen, cert, modes).passed
        hs = [random_smooth(pipe.grid, rng, positive=False) for _ in range(100)]
        assert check_translya(gen, cert, hs).passed


def test_translya_fails_for_false_constants(gaussian):
    gen = gaussian.generator
    cert = verify_lyapunov(gen, exp_quadratic(gaussian), 1.0, 0.5, raise_on_failure=False)
    assert not check_translya(gen, cert, [np.ones(gen.size)]).passed


def test_indicator_form(gaussian, double_well):
    for pipe, (c, b) in ((gaussian, (0.25, 0.5)), (double_well, (0.25, 1.0))):
        cert = verify_lyapunov(pipe.generator, exp_quadratic(pipe), c, b)
        rep = check_indicator_form(pipe.generator, cert)
        assert rep.passed
        assert rep.details["radius"] == pytest.approx(np.sqrt((b + c) / c))
    # the unit ball is too small for the Gaussian pair: 1/4 x^2 - 1/2 > -1/4 needs |x| > 1
    cert = verify_lyapunov(gaussian.generator, exp_quadratic(gaussian), 0.25, 0.5)
    assert not check_indicator_form(gaussian.generator, cert, radius=1.0).passed
