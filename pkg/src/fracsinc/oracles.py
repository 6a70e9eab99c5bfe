r"""Reference solutions and the scalar quadrature-error probe.

* the 1D problem on :math:`(0, 1)` with :math:`v \equiv 1`, both as a
  truncated sine series and through the closed-form eigenpairs of the P1
  pencil,
* the 2D eigenfunction problem and the manufactured non-homogeneous problem
  :math:`u = t^3 \sin(\pi x_1)\sin(\pi x_2)` on the unit square,
* :math:`\mathcal{E}(\lambda, t)`, the error of the sinc rule applied to the
  scalar integrand :math:`e_{\gamma,1}(-t^\gamma z^\beta) z' / (z - \lambda)`.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla
from scipy.integrate import quad_vec

from fracsinc.fem import ComplexField, FemSystem, load_vector
from fracsinc.mittag_leffler import FractionalParams, gamma_fn, mittag_leffler
from fracsinc.sinc import ContourConfig, contour_derivative, contour_point

__all__ = [
    "EigenSolution2D",
    "SpectralTruncation",
    "discrete_eigenpairs_1d",
    "discrete_spectral_1d",
    "exact_gradient_1d",
    "exact_solution_1d",
    "exact_solution_2d_eigen",
    "manufactured_amplitude",
    "manufactured_exact_2d",
    "manufactured_forcing_2d",
    "manufactured_rhs_2d",
    "probe_sup",
    "quad_error_probe",
    "semidiscrete_separable",
    "series_error_norms_1d",
]

#: largest system for which the dense eigendecomposition is attempted
DENSE_EIGEN_MAX_DOFS = 5000


@dataclass(frozen=True)
class SpectralTruncation:
    num_terms: int = 50000

    def __post_init__(self) -> None:
        if self.num_terms < 1:
            raise ValueError(f"num_terms must be positive: got {self.num_terms}")


# {{{ 1D


def _series_coefficients(
    t: float, beta: float, gamma: float, trunc: SpectralTruncation
) -> tuple[np.ndarray, np.ndarray]:
    """Odd frequencies :math:`\\pi\\ell` and the sine coefficients of
    :math:`u(t)` for :math:`v \\equiv 1` (even terms vanish)."""
    ell = np.arange(1, trunc.num_terms + 1, 2, dtype=np.float64)
    omega = np.pi * ell
    # lambda_ell^beta = (pi ell)^(2 beta)
    decay = mittag_leffler(-(t**gamma) * omega ** (2.0 * beta), gamma, 1.0).real
    return omega, 4.0 * decay / omega


def exact_solution_1d(
    t: float,
    x: float | np.ndarray,
    beta: float,
    trunc: SpectralTruncation = SpectralTruncation(),
    *,
    gamma: float = 0.5,
) -> np.ndarray:
    r"""Truncated sine series of the solution with :math:`v \equiv 1`.

    .. math::

        u(t, x) \approx \sum_{\ell \text{ odd}} e_{\gamma,1}(-t^\gamma \lambda_\ell^\beta)
            \frac{4}{\pi\ell} \sin(\pi\ell x),
        \qquad \lambda_\ell = \pi^2\ell^2.
    """
    if t < 0.0:
        raise ValueError(f"t must be non-negative: got {t}")
    x = np.asarray(x, dtype=np.float64)
    omega, coeffs = _series_coefficients(t, beta, gamma, trunc)

    out = np.zeros(x.size)
    xf = x.ravel()
    for start in range(0, omega.size, 2048):
        sl = slice(start, start + 2048)
        out += np.sin(np.outer(xf, omega[sl])) @ coeffs[sl]
    return out.reshape(x.shape)


def exact_gradient_1d(
    t: float,
    x: float | np.ndarray,
    beta: float,
    trunc: SpectralTruncation = SpectralTruncation(),
    *,
    gamma: float = 0.5,
) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    omega, coeffs = _series_coefficients(t, beta, gamma, trunc)

    out = np.zeros(x.size)
    xf = x.ravel()
    for start in range(0, omega.size, 2048):
        sl = slice(start, start + 2048)
        out += np.cos(np.outer(xf, omega[sl])) @ (coeffs[sl] * omega[sl])
    return out.reshape(x.shape)


def series_error_norms_1d(
    u: ComplexField,
    t: float,
    beta: float,
    trunc: SpectralTruncation = SpectralTruncation(),
    *,
    gamma: float = 0.5,
) -> tuple[float, float]:
    r"""Exact :math:`L^2` and :math:`H^1`-seminorm distances between the
    truncated series and a P1 function.

    The inner products of :math:`\sin(\omega x)` with the hat functions are
    integrated in closed form,

    .. math::

        \int_0^1 \sin(\omega x)\varphi_i(x)\,dx
            = \frac{2(1 - \cos\omega h)}{\omega^2 h}\sin(\omega x_i),

    so that no quadrature error (or aliasing of the high frequencies) enters.
    """
    system = u.system
    if system.dimension != 1:
        raise ValueError("series_error_norms_1d requires a 1D system")

    h = 1.0 / 2**system.level
    x = system.node_coords[:, 0]
    c = u.coeffs.real
    omega, coeffs = _series_coefficients(t, beta, gamma, trunc)

    cross_l2 = 0.0
    cross_h1 = 0.0
    for start in range(0, omega.size, 2048):
        sl = slice(start, start + 2048)
        w = omega[sl]
        proj = np.sin(np.outer(w, x)) @ c
        factor = 2.0 * (1.0 - np.cos(w * h)) / h
        cross_l2 += np.sum(coeffs[sl] * factor / w**2 * proj)
        cross_h1 += np.sum(coeffs[sl] * factor * proj)

    norm_l2 = 0.5 * np.sum(coeffs**2)
    norm_h1 = 0.5 * np.sum((coeffs * omega) ** 2)
    uh_l2 = c @ (system.mass @ c)
    uh_h1 = c @ (system.stiffness @ c)

    e_l2 = norm_l2 - 2.0 * cross_l2 + uh_l2
    e_h1 = norm_h1 - 2.0 * cross_h1 + uh_h1
    return math.sqrt(max(e_l2, 0.0)), math.sqrt(max(e_h1, 0.0))


def discrete_eigenpairs_1d(system: FemSystem) -> tuple[np.ndarray, np.ndarray]:
    r"""Closed-form eigenpairs of the uniform 1D P1 pencil.

    :returns: eigenvalues
        :math:`\lambda_{\ell,h} = \frac{6}{h^2}\frac{1 - \cos\ell\pi h}{2 + \cos\ell\pi h}`
        and a matrix whose columns are the mass-orthonormal eigenvectors.
    """
    if system.dimension != 1:
        raise ValueError("closed-form eigenpairs are only available in 1D")

    n = system.num_dofs
    h = 1.0 / (n + 1)
    ell = np.arange(1, n + 1)
    theta = ell * np.pi * h
    lam = 6.0 / h**2 * (1.0 - np.cos(theta)) / (2.0 + np.cos(theta))

    kk = np.arange(1, n + 1)
    # sum_k sin^2 = 1/(2h) and s^T M s = (2 + cos theta) / 6
    psi = np.sin(np.outer(kk, theta)) * np.sqrt(6.0 / (2.0 + np.cos(theta)))
    return lam, psi


def discrete_spectral_1d(
    system: FemSystem,
    t: float,
    beta: float,
    gamma: float,
    *,
    load: np.ndarray | None = None,
) -> ComplexField:
    r"""Semi-discrete solution :math:`e_{\gamma,1}(-t^\gamma L_h^\beta)\pi_h v`.

    :arg load: inner products :math:`(v, \varphi_k)`; defaults to
        :math:`v \equiv 1`.
    """
    if system.dimension != 1:
        raise ValueError("discrete_spectral_1d requires a 1D system")
    if t < 0.0:
        raise ValueError(f"t must be non-negative: got {t}")

    lam, psi = discrete_eigenpairs_1d(system)
    if load is None:
        load = np.full(system.num_dofs, 1.0 / (system.num_dofs + 1))

    vl = psi.T @ load
    decay = mittag_leffler(-(t**gamma) * lam**beta, gamma, 1.0).real
    return ComplexField((psi @ (decay * vl)).astype(np.complex128), system)


# }}}


# {{{ 2D


def _sinsin(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    return np.sin(np.pi * x1) * np.sin(np.pi * x2)


def _sinsin_grad(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    return np.pi * np.stack([
        np.cos(np.pi * x1) * np.sin(np.pi * x2),
        np.sin(np.pi * x1) * np.cos(np.pi * x2),
    ])


@dataclass(frozen=True)
class EigenSolution2D:
    """:math:`u(t) = \\text{factor} \\cdot \\sin(\\pi x_1)\\sin(\\pi x_2)`."""

    factor: float

    def __call__(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        return self.factor * _sinsin(x1, x2)

    def gradient(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        return self.factor * _sinsin_grad(x1, x2)

    @staticmethod
    def profile(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        return _sinsin(x1, x2)


def exact_solution_2d_eigen(t: float, beta: float, gamma: float) -> EigenSolution2D:
    r"""Solution for :math:`v = \sin(\pi x_1)\sin(\pi x_2)`, whose eigenvalue
    is :math:`2\pi^2`."""
    if t < 0.0:
        raise ValueError(f"t must be non-negative: got {t}")
    factor = mittag_leffler(-(t**gamma) * (2.0 * np.pi**2) ** beta, gamma, 1.0)
    return EigenSolution2D(float(factor.real))


def _manufactured_time_factor(t: float, beta: float, gamma: float) -> float:
    if t <= 0.0:
        return 0.0
    caputo = gamma_fn(4.0) / gamma_fn(4.0 - gamma) * t ** (3.0 - gamma)
    return caputo + t**3 * (2.0 * math.pi**2) ** beta


def manufactured_rhs_2d(
    t: float, beta: float, gamma: float
) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    r"""Forcing at time *t* for the exact solution
    :math:`u = t^3\sin(\pi x_1)\sin(\pi x_2)`."""
    if t < 0.0:
        raise ValueError(f"t must be non-negative: got {t}")
    a = _manufactured_time_factor(t, beta, gamma)
    return lambda x1, x2: a * _sinsin(x1, x2)


def manufactured_forcing_2d(
    beta: float, gamma: float
) -> Callable[[float, np.ndarray, np.ndarray], np.ndarray]:
    """Time-dependent version of :func:`manufactured_rhs_2d`, ``f(t, x1, x2)``."""
    def f(t: float, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        return _manufactured_time_factor(t, beta, gamma) * _sinsin(x1, x2)

    return f


def manufactured_exact_2d(t: float) -> EigenSolution2D:
    return EigenSolution2D(t**3)


def semidiscrete_separable(
    system: FemSystem,
    params: FractionalParams,
    T: float,
    amplitude: Callable[[float], float],
    profile: Callable[..., np.ndarray],
) -> ComplexField:
    r"""Semi-discrete solution at :math:`T` (exact in time) for zero initial
    data and the forcing :math:`f(t, x) = a(t) p(x)`.

    With the eigenpairs :math:`(\lambda_\ell, \psi_\ell)` of the pencil
    (computed densely),

    .. math::

        u_h(T) = \sum_\ell \phi(\lambda_\ell)\,(p, \psi_\ell)\,\psi_\ell,
        \qquad
        \phi(\lambda) = \int_0^T r^{\gamma-1} e_{\gamma,\gamma}(-r^\gamma\lambda^\beta)
            a(T - r)\,dr,

    and the substitution :math:`s = r^\gamma` removes the endpoint
    singularity of :math:`\phi`. Used to isolate the time discretization
    error from the spatial one.
    """
    if system.num_dofs > DENSE_EIGEN_MAX_DOFS:
        raise ValueError(
            f"system too large for a dense eigendecomposition: {system.num_dofs} dofs"
        )
    if not T > 0.0:
        raise ValueError(f"T must be positive: got {T}")

    lam, psi = sla.eigh(system.stiffness.toarray(), system.mass.toarray())
    lb = lam**params.beta
    g = params.gamma

    def integrand(s: float) -> np.ndarray:
        r = s ** (1.0 / g)
        return mittag_leffler(-s * lb, g, g).real * amplitude(max(T - r, 0.0))

    # the kernel varies on the scale 1 / lambda_max^beta near s = 0
    points = [p for p in np.geomspace(1.0 / lb[-1], T**g, 8)[:-1]]
    phi, _ = quad_vec(
        integrand, 0.0, T**g, epsabs=1.0e-15, epsrel=1.0e-13, limit=2000, points=points
    )
    coeffs = psi @ (phi / g * (psi.T @ load_vector(system, profile)))
    return ComplexField(coeffs.astype(np.complex128), system)


def manufactured_amplitude(beta: float, gamma: float) -> Callable[[float], float]:
    """Time factor of :func:`manufactured_forcing_2d`."""
    return lambda t: _manufactured_time_factor(t, beta, gamma)


# }}}


# {{{ quadrature error probe


def _probe_integrand(
    y: np.ndarray, lambdas: np.ndarray, t: float, gamma: float, beta: float, b: float
) -> np.ndarray:
    z = b * (np.cosh(y) + 1j * np.sinh(y))
    dz = b * (np.sinh(y) + 1j * np.cosh(y))
    e = mittag_leffler(-(t**gamma) * np.exp(beta * np.log(z)), gamma, 1.0)
    return (e * dz)[..., None] / (z[..., None] - lambdas)


def _tail_cutoff(lambdas: np.ndarray, t: float, gamma: float, beta: float, b: float) -> float:
    """Smallest :math:`Y` past which the integrand stays below ``1e-14``.

    The integrand decays like :math:`C t^{-\\gamma} e^{-\\beta |y|}`; the
    constant is read off a coarse scan.
    """
    y = np.arange(1.0, 600.0, 1.0)
    mag = np.max(np.abs(_probe_integrand(y, lambdas, t, gamma, beta, b)), axis=1)
    # fit C from the far part of the scan, where the decay is established
    c = np.max(mag * np.exp(beta * y))
    return float(min(np.log(c / (beta * 1.0e-14)) / beta, 650.0))


@functools.lru_cache(maxsize=256)
def _reference_integrals(
    lambdas: tuple[float, ...], t: float, gamma: float, beta: float, b: float
) -> np.ndarray:
    lam = np.array(lambdas)
    ymax = _tail_cutoff(lam, t, gamma, beta, b)

    # g(-y) = -conj(g(y)): the integral is twice the imaginary part on y > 0
    def f(y: float) -> np.ndarray:
        return _probe_integrand(np.array([y]), lam, t, gamma, beta, b)[0].imag

    pts = [0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0]
    pts = [p for p in pts if p < ymax] + [ymax]
    total = np.zeros(lam.size)
    for lo, hi in zip(pts[:-1], pts[1:]):
        val, _ = quad_vec(f, lo, hi, epsabs=1.0e-16, epsrel=1.0e-13, limit=400)
        total += val
    return 2j * total


def _sinc_sums(
    lambdas: np.ndarray, t: float, params: FractionalParams, cfg: ContourConfig
) -> np.ndarray:
    y = cfg.nodes
    z = contour_point(cfg, y)
    dz = contour_derivative(cfg, y)
    e = mittag_leffler(-(t**params.gamma) * np.exp(params.beta * np.log(z)), params.gamma, 1.0)
    w = e * dz
    return cfg.k * ((w[:, None] / (z[:, None] - lambdas[None, :])).sum(axis=0))


def quad_error_probe(
    lam: float | np.ndarray,
    t: float,
    params: FractionalParams,
    cfg: ContourConfig,
) -> np.ndarray:
    r"""Return :math:`|\mathcal{E}(\lambda, t)|`, the error of the truncated
    sinc rule on :math:`g_\lambda(y, t) = e_{\gamma,1}(-t^\gamma z(y)^\beta) z'(y) (z(y) - \lambda)^{-1}`.

    The reference integral is computed by adaptive quadrature over a finite
    window chosen from the exponential decay of :math:`g_\lambda`.
    """
    if not t > 0.0:
        raise ValueError(f"t must be positive: got {t}")
    lam = np.atleast_1d(np.asarray(lam, dtype=np.float64))
    if np.any(lam <= cfg.b * math.sqrt(2.0)):
        raise ValueError(
            f"lambda must exceed b * sqrt(2) = {cfg.b * math.sqrt(2.0):.6g} "
            "to stay away from the contour"
        )

    ref = _reference_integrals(
        tuple(lam.tolist()), float(t), params.gamma, params.beta, cfg.b
    )
    approx = _sinc_sums(lam, t, params, cfg)
    return np.abs(ref - approx)


def probe_sup(
    t: float,
    params: FractionalParams,
    cfg: ContourConfig,
    *,
    lambda_min: float = 10.0,
    lambda_max: float = 1.0e8,
    num_points: int = 200,
) -> float:
    r"""Approximate :math:`\sup_{\lambda \ge \lambda_{\min}} |\mathcal{E}(\lambda, t)|`
    by sampling a logarithmic grid."""
    if lambda_min < cfg.lambda1_hint and not math.isclose(lambda_min, 10.0):
        raise ValueError("lambda_min must not be below the spectral bound")
    lam = np.geomspace(lambda_min, lambda_max, num_points)
    return float(np.max(quad_error_probe(lam, t, params, cfg)))


# }}}
