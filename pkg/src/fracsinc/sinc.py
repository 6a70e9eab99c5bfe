r"""Sinc quadrature of Dunford-Taylor integrals on a hyperbolic contour.

The contour is :math:`z(y) = b(\cosh y + i \sinh y)` and the quadrature nodes
are :math:`y_j = jk`, :math:`j = -N, \dots, N`. Every operator below is a sum
of the form

.. math::

    \frac{k}{2\pi i} \sum_{j=-N}^{N} w_j \, (L_h - z_j)^{-1} g_h,

with :math:`w_j` collecting the scalar factors, realized with one complex
shifted solve per node in the matrix form
:math:`(\widetilde{A} - z_j\widetilde{M})^{-1} \widetilde{V}` where
:math:`\widetilde{V}` holds the inner products of the data with the basis
functions.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from fracsinc.fem import ComplexField, FemSystem, shifted_solve
from fracsinc.mittag_leffler import FractionalParams, mittag_leffler

__all__ = [
    "ContourConfig",
    "RealifyError",
    "contour_derivative",
    "contour_point",
    "contour_sum",
    "initial_value",
    "interval_average_apply",
    "propagate_homogeneous",
    "realify",
    "sinc_grid",
]

Solver = Callable[[FemSystem, complex, np.ndarray], np.ndarray]

DEFAULT_D = math.pi / 8.0
DEFAULT_B = 1.0

#: sign of the resolvent realized by the shifted solves: ``-1`` applies
#: :math:`(\widetilde{A} - z\widetilde{M})^{-1}`, ``+1`` applies
#: :math:`(\widetilde{A} + z\widetilde{M})^{-1}`
DEFAULT_CONTOUR_SIGN = -1


class RealifyError(AssertionError):
    pass


@dataclass(frozen=True)
class ContourConfig:
    """Hyperbolic contour and sinc grid parameters.

    :arg b: contour scale, must satisfy :math:`0 < b < \\lambda_1 / \\sqrt{2}`.
    :arg d: half-width of the analyticity strip, in :math:`(0, \\pi/4)`.
    :arg N: the quadrature uses :math:`2N + 1` nodes.
    :arg k: node spacing.
    :arg lambda1_hint: lower bound for the spectrum of the operator.
    """

    b: float
    d: float
    N: int
    k: float
    lambda1_hint: float

    def __post_init__(self) -> None:
        if not 0.0 < self.d < math.pi / 4.0:
            raise ValueError(f"d must be in (0, pi/4): got {self.d}")
        if self.N < 1:
            raise ValueError(f"N must be positive: got {self.N}")
        if not self.k > 0.0:
            raise ValueError(f"k must be positive: got {self.k}")
        if not self.lambda1_hint > 0.0:
            raise ValueError(f"lambda1_hint must be positive: got {self.lambda1_hint}")
        if not 0.0 < self.b < self.lambda1_hint / math.sqrt(2.0):
            raise ValueError(
                f"b must be in (0, lambda1 / sqrt(2)) = "
                f"(0, {self.lambda1_hint / math.sqrt(2.0):.6g}): got {self.b}"
            )

    @classmethod
    def balanced(
        cls,
        beta: float,
        N: int,
        *,
        d: float = DEFAULT_D,
        b: float = DEFAULT_B,
        lambda1_hint: float = math.pi**2,
    ) -> ContourConfig:
        """Use the spacing that balances discretization and truncation errors."""
        k, _ = sinc_grid(beta, N, d)
        return cls(b=b, d=d, N=N, k=k, lambda1_hint=lambda1_hint)

    @property
    def nodes(self) -> np.ndarray:
        return self.k * np.arange(-self.N, self.N + 1)


def contour_point(cfg: ContourConfig, y: float | np.ndarray) -> np.ndarray:
    return cfg.b * (np.cosh(y) + 1j * np.sinh(y))


def contour_derivative(cfg: ContourConfig, y: float | np.ndarray) -> np.ndarray:
    return cfg.b * (np.sinh(y) + 1j * np.cosh(y))


def sinc_grid(beta: float, N: int, d: float = DEFAULT_D) -> tuple[float, np.ndarray]:
    """Return the spacing :math:`k = \\sqrt{\\pi d / (\\beta N)}` and the
    nodes :math:`y_j = jk`, :math:`j = -N, \\dots, N`."""
    if N < 1:
        raise ValueError(f"N must be positive: got {N}")
    k = math.sqrt(math.pi * d / (beta * N))
    return k, k * np.arange(-N, N + 1)


def _contour(cfg: ContourConfig, beta: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    y = cfg.nodes
    z = contour_point(cfg, y)
    # principal branch; the contour stays in the right half plane
    assert np.all(z.real > 0.0)
    return z, contour_derivative(cfg, y), np.exp(beta * np.log(z))


# {{{ summation


class _CompensatedSum:
    """Neumaier summation of complex arrays, real and imaginary parts
    compensated separately."""

    def __init__(self, n: int) -> None:
        self.s = np.zeros(2 * n)
        self.c = np.zeros(2 * n)

    def add(self, x: np.ndarray) -> None:
        x = np.ascontiguousarray(x, dtype=np.complex128).view(np.float64)
        t = self.s + x
        big = np.abs(self.s) >= np.abs(x)
        self.c += np.where(big, (self.s - t) + x, (x - t) + self.s)
        self.s = t

    @property
    def value(self) -> np.ndarray:
        return (self.s + self.c).view(np.complex128)


def contour_sum(
    system: FemSystem,
    z: np.ndarray,
    weights: np.ndarray,
    rhs: np.ndarray | Callable[[int], np.ndarray],
    k: float,
    *,
    contour_sign: int = DEFAULT_CONTOUR_SIGN,
    solver: Solver = shifted_solve,
    workers: int | None = None,
) -> np.ndarray:
    r"""Evaluate :math:`\frac{k}{2\pi i}\sum_j w_j (L_h - z_j)^{-1}` applied to
    the mass-weighted vector(s) *rhs*.

    The contour runs upwards with the spectrum on its right, so this is the
    positively oriented resolvent integral for ``contour_sign = -1``.

    :arg rhs: a single vector shared by all nodes, or a callable returning
        the vector for node index ``j`` (``0 <= j < len(z)``).
    :arg contour_sign: ``-1`` solves with :math:`\widetilde{A} - z\widetilde{M}`,
        ``+1`` with :math:`\widetilde{A} + z\widetilde{M}`.
    :arg workers: number of threads used for the independent solves. The
        reduction is always done in ascending node order.
    """
    if contour_sign not in (-1, 1):
        raise ValueError(f"contour_sign must be -1 or +1: got {contour_sign}")

    get_rhs = rhs if callable(rhs) else (lambda _j: rhs)

    def node(j: int) -> np.ndarray:
        if weights[j] == 0.0:
            return np.zeros(system.num_dofs, dtype=np.complex128)
        return weights[j] * solver(system, contour_sign * z[j], get_rhs(j))

    indices = range(len(z))
    acc = _CompensatedSum(system.num_dofs)
    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for r in pool.map(node, indices):
                acc.add(r)
    else:
        for j in indices:
            acc.add(node(j))

    return k / (2j * np.pi) * acc.value


# }}}


def realify(u: ComplexField) -> ComplexField:
    """Drop the imaginary part left over by a conjugate-symmetric sum.

    :raises RealifyError: if the imaginary part exceeds
        ``1e-11 * (1 + max|Re|)``, which indicates a broken symmetry.
    """
    c = u.coeffs
    if np.isrealobj(c):
        return u

    im = float(np.max(np.abs(c.imag), initial=0.0))
    re = float(np.max(np.abs(c.real), initial=0.0))
    if im > 1.0e-11 * (1.0 + re):
        raise RealifyError(
            f"imaginary part {im:.3e} too large for a real field (max real {re:.3e})"
        )
    return ComplexField(c.real.copy(), u.system)


def initial_value(v: ComplexField) -> ComplexField:
    """The exact :math:`t = 0` limit of the propagator."""
    return ComplexField(v.coeffs.copy(), v.system)


def propagate_homogeneous(
    system: FemSystem,
    params: FractionalParams,
    cfg: ContourConfig,
    t: float,
    v: ComplexField,
    *,
    contour_sign: int = DEFAULT_CONTOUR_SIGN,
    solver: Solver = shifted_solve,
    workers: int | None = None,
    real: bool = True,
) -> ComplexField:
    r"""Approximate :math:`e_{\gamma,1}(-t^\gamma L_h^\beta) v_h` by sinc quadrature.

    :arg v: the finite element initial data (e.g. from
        :func:`~fracsinc.fem.l2_project`).
    :arg real: pass the result through :func:`realify`.
    """
    if not t > 0.0:
        raise ValueError(f"t must be positive (use initial_value at t = 0): got {t}")
    if v.system is not system:
        raise ValueError("initial data lives on a different system")

    z, dz, zb = _contour(cfg, params.beta)
    weights = mittag_leffler(-(t**params.gamma) * zb, params.gamma, 1.0) * dz

    rhs = system.mass @ v.coeffs
    coeffs = contour_sum(
        system, z, weights, rhs, cfg.k,
        contour_sign=contour_sign, solver=solver, workers=workers,
    )
    out = ComplexField(coeffs, system)
    return realify(out) if real else out


def interval_average_apply(
    system: FemSystem,
    params: FractionalParams,
    cfg: ContourConfig,
    t: float,
    tau: float,
    g: ComplexField,
    *,
    contour_sign: int = DEFAULT_CONTOUR_SIGN,
    solver: Solver = shifted_solve,
    workers: int | None = None,
    real: bool = True,
) -> ComplexField:
    r"""Approximate :math:`\int_t^{t+\tau} r^{\gamma-1}e_{\gamma,\gamma}(-r^\gamma L_h^\beta)\,dr\; g_h`.

    Uses the identity
    :math:`L_h^{-\beta}(e_{\gamma,1}(-t^\gamma L_h^\beta) - e_{\gamma,1}(-(t+\tau)^\gamma L_h^\beta))`
    and sinc quadrature of the corresponding contour integral. ``t = 0`` is
    allowed (first interval of a uniform partition).
    """
    if not t >= 0.0:
        raise ValueError(f"t must be non-negative: got {t}")
    if not tau > 0.0:
        raise ValueError(f"tau must be positive: got {tau}")
    if g.system is not system:
        raise ValueError("data lives on a different system")

    z, dz, zb = _contour(cfg, params.beta)
    e0 = mittag_leffler(-(t**params.gamma) * zb, params.gamma, 1.0)
    e1 = mittag_leffler(-((t + tau) ** params.gamma) * zb, params.gamma, 1.0)
    weights = (e0 - e1) / zb * dz

    rhs = system.mass @ g.coeffs
    coeffs = contour_sum(
        system, z, weights, rhs, cfg.k,
        contour_sign=contour_sign, solver=solver, workers=workers,
    )
    out = ComplexField(coeffs, system)
    return realify(out) if real else out
