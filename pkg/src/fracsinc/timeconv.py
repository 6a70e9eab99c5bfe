r"""Pseudo-midpoint convolution quadrature for the non-homogeneous problem.

The solution of :math:`\partial_t^\gamma u + L^\beta u = f`, :math:`u(0) = 0`,
at time :math:`T` is

.. math::

    u(T) = \int_0^T r^{\gamma-1} e_{\gamma,\gamma}(-r^\gamma L^\beta) f(T - r)\,dr.

The forcing is frozen at the midpoint of every subinterval of a partition of
:math:`[0, T]`, while the kernel is integrated exactly through

.. math::

    \int_a^b r^{\gamma-1} e_{\gamma,\gamma}(-r^\gamma \lambda^\beta)\,dr
        = \lambda^{-\beta}\left(e_{\gamma,1}(-a^\gamma\lambda^\beta)
            - e_{\gamma,1}(-b^\gamma\lambda^\beta)\right).

Exchanging the time sum with the sinc sum gives one complex solve per sinc
node, independently of the number of time intervals.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from fracsinc.fem import ComplexField, FemSystem, _mass_solve, load_vector, shifted_solve
from fracsinc.mittag_leffler import FractionalParams, mittag_leffler
from fracsinc.sinc import (
    DEFAULT_CONTOUR_SIGN,
    ContourConfig,
    Solver,
    _contour,
    contour_sum,
    interval_average_apply,
    propagate_homogeneous,
    realify,
)

__all__ = [
    "PROFILES",
    "GeometricPartition",
    "TabulatedForcing",
    "geometric_partition",
    "midpoint_loads",
    "solve_full",
    "solve_nonhomogeneous",
    "solve_nonhomogeneous_naive",
    "uniform_partition",
]

logger = logging.getLogger(__name__)

#: ``f(t, x)`` in 1D or ``f(t, x1, x2)`` in 2D
Forcing = Callable[..., np.ndarray]

#: relative size below which a Mittag-Leffler difference is reported as
#: cancelled, in units of machine epsilon
CANCELLATION_FACTOR = 1.0e3


# {{{ partitions


@dataclass(frozen=True)
class GeometricPartition:
    r"""Partition of :math:`[0, T]` made of blocks of equal subintervals.

    For the graded partition, the coarse times are
    :math:`t_j = 2^{-(\mathcal{M}-j)} T`, :math:`j = 1, \dots, \mathcal{M}`, and
    block :math:`j = 1, \dots, \mathcal{M}-1` splits :math:`[t_j, t_{j+1}]`
    into :math:`\mathcal{N}` intervals of width :math:`\tau_j = t_j/\mathcal{N}`.
    The first interval :math:`[0, t_1]` is not part of any block.

    A uniform partition is the degenerate case of a single block starting at
    :math:`0`.

    :arg fine_times: array of shape ``(num_blocks, calN + 1)``; row ``j``
        holds :math:`t_{j,0}, \dots, t_{j,\mathcal{N}}`.
    """

    T: float
    calN: int
    calM: int
    coarse_times: np.ndarray
    fine_times: np.ndarray
    widths: np.ndarray
    kind: str = "geometric"

    def __post_init__(self) -> None:
        if not self.T > 0.0:
            raise ValueError(f"T must be positive: got {self.T}")
        if self.fine_times.shape != (self.widths.size, self.calN + 1):
            raise ValueError("fine_times and widths are inconsistent")

    @property
    def num_intervals(self) -> int:
        return self.widths.size * self.calN

    @property
    def left(self) -> np.ndarray:
        return self.fine_times[:, :-1].ravel()

    @property
    def right(self) -> np.ndarray:
        return self.fine_times[:, 1:].ravel()

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.left + self.right)

    @property
    def interval_widths(self) -> np.ndarray:
        return np.repeat(self.widths, self.calN)


def num_levels(calN: int, gamma: float) -> int:
    r""":math:`\mathcal{M} = \lceil 2\log_2\mathcal{N}/\gamma\rceil`, at least 2
    so that there is one block."""
    return max(math.ceil(2.0 * math.log2(calN) / gamma), 2)


def geometric_partition(T: float, calN: int, gamma: float) -> GeometricPartition:
    """Build the partition graded towards :math:`t = 0`.

    ``gamma = 1`` is accepted as a limiting case.
    """
    if not T > 0.0:
        raise ValueError(f"T must be positive: got {T}")
    if calN < 1:
        raise ValueError(f"calN must be positive: got {calN}")
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must be in (0, 1]: got {gamma}")

    calM = num_levels(calN, gamma)
    # powers of two: all the times below are exact in binary
    coarse = T * np.ldexp(1.0, np.arange(1, calM + 1) - calM)
    widths = coarse[:-1] / calN
    fine = coarse[:-1, None] + np.arange(calN + 1)[None, :] * widths[:, None]
    # block continuity holds exactly, but pin the endpoints anyway
    fine[:, -1] = coarse[1:]

    return GeometricPartition(
        T=T, calN=calN, calM=calM, coarse_times=coarse,
        fine_times=fine, widths=widths, kind="geometric",
    )


def uniform_partition(T: float, steps: int) -> GeometricPartition:
    """Uniform partition of :math:`[0, T]` including the first interval."""
    if not T > 0.0:
        raise ValueError(f"T must be positive: got {T}")
    if steps < 1:
        raise ValueError(f"steps must be positive: got {steps}")

    fine = T * np.arange(steps + 1)[None, :] / steps
    fine[0, -1] = T
    return GeometricPartition(
        T=T, calN=steps, calM=2, coarse_times=np.array([0.0, T]),
        fine_times=fine, widths=np.array([T / steps]), kind="uniform",
    )


# }}}


# {{{ forcing


def _sinsin(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    return np.sin(np.pi * x1) * np.sin(np.pi * x2)


def _sin(x: np.ndarray) -> np.ndarray:
    return np.sin(np.pi * x)


def _one(*x: np.ndarray) -> np.ndarray:
    return np.ones_like(x[0])


#: named spatial profiles for :class:`TabulatedForcing`
PROFILES: dict[str, Callable[..., np.ndarray]] = {
    "sin": _sin,
    "sinsin": _sinsin,
    "one": _one,
}


@dataclass(frozen=True)
class TabulatedForcing:
    r""":math:`f(t, x) = a(t)\,p(x)` with :math:`a` linearly interpolated
    from a table and :math:`p` one of :data:`PROFILES`."""

    times: np.ndarray
    amplitudes: np.ndarray
    profile: str = "sinsin"
    _profile_fn: Callable[..., np.ndarray] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.profile not in PROFILES:
            raise ValueError(
                f"unknown profile '{self.profile}' (expected one of {sorted(PROFILES)})"
            )
        if self.times.ndim != 1 or self.times.shape != self.amplitudes.shape:
            raise ValueError("times and amplitudes must be 1D arrays of equal length")
        if self.times.size < 2 or np.any(np.diff(self.times) <= 0.0):
            raise ValueError("times must be strictly increasing with at least 2 entries")
        object.__setattr__(self, "_profile_fn", PROFILES[self.profile])

    @classmethod
    def from_csv(cls, filename: str, profile: str = "sinsin") -> TabulatedForcing:
        """Read a two-column ``t,amplitude`` table (``#`` starts a comment)."""
        data = np.loadtxt(filename, delimiter=",", comments="#", ndmin=2)
        if data.shape[1] != 2:
            raise ValueError(f"expected 2 columns in '{filename}': got {data.shape[1]}")
        return cls(data[:, 0].copy(), data[:, 1].copy(), profile)

    def amplitude(self, t: float) -> float:
        if not self.times[0] <= t <= self.times[-1]:
            raise ValueError(
                f"t = {t} outside the tabulated range "
                f"[{self.times[0]}, {self.times[-1]}]"
            )
        return float(np.interp(t, self.times, self.amplitudes))

    def __call__(self, t: float, *x: np.ndarray) -> np.ndarray:
        return self.amplitude(t) * self._profile_fn(*x)


# }}}


# {{{ solvers


def midpoint_loads(
    system: FemSystem, partition: GeometricPartition, f: Forcing, T: float | None = None
) -> np.ndarray:
    r"""Inner products :math:`(f(T - t_{j,l-1/2}), \varphi_i)` for every
    interval, one row per interval in the order of
    :attr:`GeometricPartition.left`."""
    T = partition.T if T is None else T
    times = T - partition.midpoints
    loads = np.empty((times.size, system.num_dofs))
    for i, s in enumerate(times):
        loads[i] = load_vector(system, lambda *x, s=s: f(s, *x))
    return loads


def _kernel_differences(
    params: FractionalParams, zb: np.ndarray, partition: GeometricPartition
) -> np.ndarray:
    r"""Matrix of :math:`e_{\gamma,1}(-t_{i-1}^\gamma z_n^\beta) - e_{\gamma,1}(-t_i^\gamma z_n^\beta)`
    with one row per sinc node and one column per interval."""
    times, inverse = np.unique(
        np.concatenate([partition.left, partition.right]), return_inverse=True
    )
    e = mittag_leffler(
        -(times[None, :] ** params.gamma) * zb[:, None], params.gamma, 1.0
    )
    n = partition.num_intervals
    e0 = e[:, inverse[:n]]
    e1 = e[:, inverse[n:]]
    diff = e0 - e1

    scale = np.abs(e0) + np.abs(e1)
    cancelled = np.abs(diff) <= CANCELLATION_FACTOR * np.finfo(float).eps * scale
    if np.any(cancelled & (scale > 0.0)):
        logger.warning(
            "catastrophic cancellation in %d Mittag-Leffler differences",
            int(np.count_nonzero(cancelled)),
        )
    return diff


def solve_nonhomogeneous(
    system: FemSystem,
    params: FractionalParams,
    cfg: ContourConfig,
    partition: GeometricPartition,
    f: Forcing,
    *,
    loads: np.ndarray | None = None,
    contour_sign: int = DEFAULT_CONTOUR_SIGN,
    solver: Solver = shifted_solve,
    workers: int | None = None,
    real: bool = True,
) -> ComplexField:
    r"""Fully discrete solution at :math:`T` of the problem with zero initial
    data and forcing *f*.

    .. math::

        u(T) \approx \frac{k}{2\pi i}\sum_{n=-N}^{N} z_n^{-\beta} z_n'
            (L_h - z_n)^{-1} \mathcal{H}_n,
        \qquad
        \mathcal{H}_n = \sum_{j,l} \left(e_{\gamma,1}(-t_{j,l-1}^\gamma z_n^\beta)
            - e_{\gamma,1}(-t_{j,l}^\gamma z_n^\beta)\right)
            F_{j,l},

    where :math:`F_{j,l}` are the :func:`midpoint_loads`. Exactly
    :math:`2N + 1` calls to *solver* are made.

    :arg loads: precomputed :func:`midpoint_loads`, to reuse across calls.
    """
    if loads is None:
        loads = midpoint_loads(system, partition, f)
    if loads.shape != (partition.num_intervals, system.num_dofs):
        raise ValueError(f"loads have the wrong shape: {loads.shape}")

    z, dz, zb = _contour(cfg, params.beta)
    diff = _kernel_differences(params, zb, partition)
    weights = dz / zb

    coeffs = contour_sum(
        system, z, weights, lambda j: diff[j] @ loads, cfg.k,
        contour_sign=contour_sign, solver=solver, workers=workers,
    )
    out = ComplexField(coeffs, system)
    return realify(out) if real else out


def solve_nonhomogeneous_naive(
    system: FemSystem,
    params: FractionalParams,
    cfg: ContourConfig,
    partition: GeometricPartition,
    f: Forcing,
    *,
    contour_sign: int = DEFAULT_CONTOUR_SIGN,
    solver: Solver = shifted_solve,
) -> ComplexField:
    """Reference implementation of :func:`solve_nonhomogeneous` as a sum of
    :func:`~fracsinc.sinc.interval_average_apply` over the intervals; costs
    :math:`(2N + 1)` solves per interval."""
    loads = midpoint_loads(system, partition, f)

    total = ComplexField(np.zeros(system.num_dofs, dtype=np.complex128), system)
    for a, tau, load in zip(partition.left, partition.interval_widths, loads):
        g = ComplexField(_mass_solve(system, load).astype(np.complex128), system)
        total = total + interval_average_apply(
            system, params, cfg, a, tau, g,
            contour_sign=contour_sign, solver=solver, real=False,
        )
    return realify(total)


def solve_full(
    system: FemSystem,
    params: FractionalParams,
    cfg: ContourConfig,
    partition: GeometricPartition,
    v: ComplexField,
    f: Forcing,
    **kwargs,
) -> ComplexField:
    """Superposition of the homogeneous and the non-homogeneous solutions."""
    return (propagate_homogeneous(system, params, cfg, partition.T, v, **kwargs)
            + solve_nonhomogeneous(system, params, cfg, partition, f, **kwargs))


# }}}
