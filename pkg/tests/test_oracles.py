import math

import numpy as np
import pytest
import scipy.linalg as sla
from scipy.integrate import quad

from fracsinc.fem import build_system, error_norms, load_vector
from fracsinc.mittag_leffler import FractionalParams, gamma_fn, mittag_leffler
from fracsinc.oracles import (
    SpectralTruncation,
    _series_coefficients,
    _sinc_sums,
    discrete_spectral_1d,
    exact_gradient_1d,
    exact_solution_1d,
    exact_solution_2d_eigen,
    manufactured_exact_2d,
    manufactured_rhs_2d,
    probe_sup,
    quad_error_probe,
    semidiscrete_separable,
    series_error_norms_1d,
)
from fracsinc.sinc import ContourConfig


# {{{ 1D


def test_series_at_t0():
    # interior evaluation of the Fourier series of the constant 1
    assert exact_solution_1d(0.0, 0.5, 0.5) == pytest.approx(1.0, abs=1.0e-4)
    assert exact_solution_1d(0.3, np.array([0.0]), 0.5) == pytest.approx([0.0], abs=1.0e-14)
    _, coeffs = _series_coefficients(0.0, 0.5, 0.5, SpectralTruncation(10))
    assert coeffs[0] == pytest.approx(4.0 / math.pi, rel=1.0e-14)
    with pytest.raises(ValueError):
        SpectralTruncation(0)


def test_discrete_spectral_level1():
    s = build_system(1, 1)
    for t, beta in [(0.5, 0.5), (0.1, 0.25)]:
        u = discrete_spectral_1d(s, t, beta, 0.5)
        expected = 1.5 * complex(mittag_leffler(-(t**0.5) * 12.0**beta, 0.5, 1.0)).real
        assert u.coeffs == pytest.approx([expected], rel=1.0e-12)


def test_discrete_spectral_t0_is_projection():
    s = build_system(1, 4)
    u = discrete_spectral_1d(s, 0.0, 0.5, 0.5)
    ones = np.linalg.solve(s.mass.toarray(), np.full(s.num_dofs, 1.0 / 16.0))
    assert u.coeffs.real == pytest.approx(ones, rel=1.0e-12)
    with pytest.raises(ValueError):
        discrete_spectral_1d(build_system(2, 2), 0.5, 0.5, 0.5)


def test_series_norms_match_quadrature():
    # closed-form inner products against a brute-force evaluation with a
    # short, well-resolved series
    s = build_system(1, 4)
    trunc = SpectralTruncation(15)
    u = discrete_spectral_1d(s, 0.5, 0.5, 0.5)
    fast = series_error_norms_1d(u, 0.5, 0.5, trunc)
    slow = error_norms(
        u,
        lambda x: exact_solution_1d(0.5, x, 0.5, trunc),
        lambda x: exact_gradient_1d(0.5, x, 0.5, trunc),
        npoints=8,
    )
    assert fast == pytest.approx(slow, rel=1.0e-6)


# }}}


# {{{ 2D


def test_eigen_solution_factor():
    assert exact_solution_2d_eigen(0.0, 0.5, 0.5).factor == 1.0
    assert exact_solution_2d_eigen(0.5, 0.5, 0.5).factor == pytest.approx(0.1715, abs=2.0e-4)
    factors = [exact_solution_2d_eigen(t, 0.3, 0.7).factor for t in np.linspace(0.0, 2.0, 50)]
    assert np.all(np.diff(factors) < 0.0)


def test_manufactured_forcing():
    f = manufactured_rhs_2d(0.0, 0.5, 0.5)
    x = np.linspace(0.1, 0.9, 5)
    assert np.all(f(x, x) == 0.0)

    g = manufactured_rhs_2d(1.0, 0.5, 0.5)
    factor = 6.0 / gamma_fn(3.5) + math.sqrt(2.0 * math.pi**2)
    assert 6.0 / gamma_fn(3.5) == pytest.approx(1.80541, abs=1.0e-5)
    assert math.sqrt(2.0 * math.pi**2) == pytest.approx(4.44288, abs=1.0e-5)
    assert g(np.array([0.5]), np.array([0.5])) == pytest.approx([factor], rel=1.0e-14)


@pytest.mark.parametrize("gamma", [0.3, 0.5, 0.7])
def test_manufactured_caputo_derivative(gamma):
    # d^gamma t^3 = 1 / Gamma(1 - gamma) int_0^t (t - s)^(-gamma) 3 s^2 ds
    for t in (0.1, 0.25, 0.5, 0.75, 1.0):
        val, _ = quad(lambda s: 3.0 * s**2, 0.0, t, weight="alg", wvar=(0.0, -gamma),
                      epsrel=1.0e-12)
        caputo = val / gamma_fn(1.0 - gamma)
        assert caputo == pytest.approx(gamma_fn(4.0) / gamma_fn(4.0 - gamma) * t ** (3.0 - gamma), rel=1.0e-6)


def test_semidiscrete_separable_constant_forcing():
    # a = 1: phi(lambda) = (1 - e(-T^gamma lambda^beta)) / lambda^beta
    s = build_system(2, 3)
    params = FractionalParams(0.4, 0.6)
    T = 0.5
    u = semidiscrete_separable(s, params, T, lambda t: 1.0, lambda x1, x2: np.ones_like(x1))
    lam, psi = sla.eigh(s.stiffness.toarray(), s.mass.toarray())
    lb = lam**params.beta
    phi = (1.0 - mittag_leffler(-(T**params.gamma) * lb, params.gamma, 1.0).real) / lb
    load = load_vector(s, lambda x1, x2: np.ones_like(x1))
    ref = psi @ (phi * (psi.T @ load))
    assert u.coeffs.real == pytest.approx(ref, rel=1.0e-9, abs=1.0e-12)
    assert manufactured_exact_2d(0.5).factor == 0.125


# }}}


# {{{ probe


def test_probe_floor_at_large_N():
    # the reference integral resolves quadrature errors well below 1e-10
    params = FractionalParams(0.5, 0.5)
    e = quad_error_probe(10.0, 0.5, params, ContourConfig.balanced(0.5, 1200))
    assert e[0] <= 1.0e-11


def test_probe_domain():
    params = FractionalParams(0.5, 0.5)
    cfg = ContourConfig.balanced(0.5, 20)
    with pytest.raises(ValueError):
        quad_error_probe(10.0, 0.0, params, cfg)
    with pytest.raises(ValueError):
        quad_error_probe(1.0, 0.5, params, cfg)


def test_probe_sup_single_point():
    params = FractionalParams(0.5, 0.5)
    cfg = ContourConfig.balanced(0.5, 50)
    one = probe_sup(0.5, params, cfg, lambda_min=100.0, lambda_max=100.0, num_points=1)
    assert one == quad_error_probe(100.0, 0.5, params, cfg)[0]


def test_probe_two_point_decay():
    params = FractionalParams(0.5, 0.5)
    a = probe_sup(0.5, params, ContourConfig.balanced(0.5, 100))
    b = probe_sup(0.5, params, ContourConfig.balanced(0.5, 400))
    predicted = math.sqrt(math.pi * (math.pi / 8.0) * 0.5) * (20.0 - 10.0)
    assert math.log(a / b) == pytest.approx(predicted, rel=0.15)


def test_probe_grid_stability():
    params = FractionalParams(0.5, 0.5)
    cfg = ContourConfig.balanced(0.5, 100)
    a = probe_sup(0.5, params, cfg, num_points=200)
    b = probe_sup(0.5, params, cfg, num_points=400)
    assert b == pytest.approx(a, rel=0.05)


def test_probe_sinc_sum_conjugate_pairing():
    params = FractionalParams(0.3, 0.7)
    cfg = ContourConfig.balanced(0.7, 60)
    lam = np.geomspace(10.0, 1.0e6, 7)
    sums = _sinc_sums(lam, 0.5, params, cfg)
    assert np.all(np.abs(sums.real) <= 1.0e-13 * np.abs(sums))


# }}}
