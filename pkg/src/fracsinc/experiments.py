"""Convergence studies producing tables of errors and observed rates."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from fracsinc.fem import ComplexField, build_system, error_norms, l2_project
from fracsinc.mittag_leffler import FractionalParams
from fracsinc.oracles import (
    discrete_spectral_1d,
    exact_solution_2d_eigen,
    manufactured_amplitude,
    manufactured_exact_2d,
    manufactured_forcing_2d,
    probe_sup,
    semidiscrete_separable,
    series_error_norms_1d,
)
from fracsinc.sinc import DEFAULT_B, DEFAULT_D, ContourConfig, propagate_homogeneous
from fracsinc.timeconv import geometric_partition, solve_nonhomogeneous, uniform_partition

__all__ = [
    "PROBLEMS",
    "ConvergenceRow",
    "ExperimentConfig",
    "convergence_space",
    "convergence_time",
    "linear_fit",
    "oroc",
    "sinc_decay",
    "solve_field",
    "time_singularity",
]

PROBLEMS = ("hom-1d", "hom-2d", "nonhom-2d", "sinc-probe")
PARTITIONS = ("geometric", "uniform")
REFERENCES = ("exact", "semidiscrete")


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of one study. List-valued fields are swept; commands that
    need a single value take the only entry and reject longer lists."""

    problem: str = "hom-1d"
    gamma: float = 0.5
    beta: float = 0.5
    t_final: tuple[float, ...] = (0.5,)
    levels: tuple[int, ...] = (3, 4, 5, 6, 7)
    N: tuple[int, ...] = (400,)
    calN_list: tuple[int, ...] = (2, 4, 8, 16, 32)
    d: float = DEFAULT_D
    b: float = DEFAULT_B
    output_path: str = "-"
    contour_sign: int = -1
    partition: str = "geometric"
    reference: str = "exact"

    def __post_init__(self) -> None:
        if self.problem not in PROBLEMS:
            raise ValueError(f"unknown problem '{self.problem}' (expected one of {PROBLEMS})")
        if self.partition not in PARTITIONS:
            raise ValueError(f"unknown partition '{self.partition}' (expected one of {PARTITIONS})")
        if self.reference not in REFERENCES:
            raise ValueError(f"unknown reference '{self.reference}' (expected one of {REFERENCES})")
        if self.contour_sign not in (-1, 1):
            raise ValueError(f"contour_sign must be -1 or +1: got {self.contour_sign}")
        FractionalParams(self.gamma, self.beta)
        if not 0.0 < self.d < math.pi / 4.0:
            raise ValueError(f"d must be in (0, pi/4): got {self.d}")
        if not 0.0 < self.b < math.pi**2 / math.sqrt(2.0):
            raise ValueError(f"b must be in (0, pi^2/sqrt(2)): got {self.b}")
        for name, values, lo in (
            ("t_final", self.t_final, 0.0),
            ("levels", self.levels, 0),
            ("N", self.N, 0),
            ("calN_list", self.calN_list, 0),
        ):
            if not values:
                raise ValueError(f"{name} must not be empty")
            if any(not v > lo for v in values):
                raise ValueError(f"{name} must be positive: got {values}")

    @property
    def params(self) -> FractionalParams:
        return FractionalParams(self.gamma, self.beta)

    def single(self, name: str) -> float | int:
        values = getattr(self, name)
        if len(values) != 1:
            raise ValueError(f"{name} must have a single value here: got {values}")
        return values[0]

    def contour(self, N: int | None = None) -> ContourConfig:
        N = int(self.single("N")) if N is None else N
        return ContourConfig.balanced(self.beta, N, d=self.d, b=self.b)

    def replace(self, **kwargs) -> ExperimentConfig:
        return dataclasses.replace(self, **kwargs)

    def describe(self) -> str:
        """All fields as ``key=value`` pairs, lists comma-separated."""
        def fmt(v: object) -> str:
            if isinstance(v, tuple):
                return ",".join(fmt(x) for x in v)
            if isinstance(v, float):
                return repr(v)
            return str(v)

        return " ".join(
            f"{f.name}={fmt(getattr(self, f.name))}" for f in dataclasses.fields(self)
        )


@dataclass(frozen=True)
class ConvergenceRow:
    abscissa: float
    error_l2: float
    error_h1: float | None = None
    oroc_l2: float | None = None
    oroc_h1: float | None = None


def oroc(errors: Sequence[float], abscissae: Sequence[float]) -> list[float]:
    r"""Observed rates between successive entries,
    :math:`\ln(e_i/e_{i+1}) / |\ln(a_{i+1}/a_i)|`.

    :arg abscissae: strictly monotone, e.g. mesh sizes being halved or
        numbers of intervals being doubled.
    """
    e = np.asarray(errors, dtype=np.float64)
    a = np.asarray(abscissae, dtype=np.float64)
    if e.shape != a.shape:
        raise ValueError("errors and abscissae must have the same length")
    if np.any(e <= 0.0) or np.any(a <= 0.0):
        raise ValueError("errors and abscissae must be strictly positive")
    steps = np.diff(np.log(a))
    if not (np.all(steps > 0.0) or np.all(steps < 0.0)):
        raise ValueError(f"abscissae must be strictly monotone: got {list(a)}")
    return list(np.log(e[:-1] / e[1:]) / np.abs(steps))


def linear_fit(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope of *y* against *x* and the coefficient of
    determination :math:`R^2`."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0.0 else 1.0
    return float(slope), float(r2)


def _with_rates(
    abscissae: Sequence[float],
    l2: Sequence[float],
    h1: Sequence[float] | None = None,
) -> list[ConvergenceRow]:
    r2 = [None] + oroc(l2, abscissae) if len(l2) > 1 else [None]
    r1 = [None] * len(l2)
    if h1 is not None and len(h1) > 1:
        r1 = [None] + oroc(h1, abscissae)

    return [
        ConvergenceRow(
            abscissa=float(a),
            error_l2=float(e),
            error_h1=None if h1 is None else float(h1[i]),
            oroc_l2=r2[i],
            oroc_h1=r1[i],
        )
        for i, (a, e) in enumerate(zip(abscissae, l2))
    ]


# {{{ studies


def convergence_space(cfg: ExperimentConfig) -> list[ConvergenceRow]:
    """Errors at the final time for a sequence of uniform refinements.

    ``hom-1d`` compares the exact-in-time semi-discrete solution with the
    series solution for :math:`v \\equiv 1` (no quadrature error enters);
    ``hom-2d`` compares the sinc approximation with the eigenfunction
    solution.
    """
    t = float(cfg.single("t_final"))
    hs, l2, h1 = [], [], []
    if cfg.problem == "hom-1d":
        for level in cfg.levels:
            system = build_system(1, level)
            u = discrete_spectral_1d(system, t, cfg.beta, cfg.gamma)
            e = series_error_norms_1d(u, t, cfg.beta, gamma=cfg.gamma)
            hs.append(system.h)
            l2.append(e[0])
            h1.append(e[1])
    elif cfg.problem == "hom-2d":
        contour = cfg.contour()
        exact = exact_solution_2d_eigen(t, cfg.beta, cfg.gamma)
        for level in cfg.levels:
            system = build_system(2, level)
            v = l2_project(system, exact.profile)
            u = propagate_homogeneous(
                system, cfg.params, contour, t, v, contour_sign=cfg.contour_sign
            )
            e = error_norms(u, exact, exact.gradient)
            hs.append(system.h)
            l2.append(e[0])
            h1.append(e[1])
    else:
        raise ValueError(f"convergence-space needs problem hom-1d or hom-2d: got {cfg.problem}")

    return _with_rates(hs, l2, h1)


def sinc_decay(cfg: ExperimentConfig) -> list[ConvergenceRow]:
    """Sup over :math:`\\lambda` of the scalar quadrature error for each N."""
    t = float(cfg.single("t_final"))
    return [
        ConvergenceRow(float(N), probe_sup(t, cfg.params, cfg.contour(N)))
        for N in cfg.N
    ]


def time_singularity(cfg: ExperimentConfig) -> list[ConvergenceRow]:
    """Sup over :math:`\\lambda` of the scalar quadrature error for each t."""
    contour = cfg.contour()
    return [
        ConvergenceRow(float(t), probe_sup(t, cfg.params, contour))
        for t in cfg.t_final
    ]


def convergence_time(cfg: ExperimentConfig) -> list[ConvergenceRow]:
    """Errors of the manufactured non-homogeneous problem in 2D at the final
    time, for a sequence of geometric (``calN``) or uniform (number of
    steps) partitions.

    With ``reference = "semidiscrete"`` the error is measured against the
    exact-in-time semi-discrete solution, which isolates the time
    discretization error from the spatial one.
    """
    T = float(cfg.single("t_final"))
    level = int(cfg.single("levels"))
    system = build_system(2, level)
    contour = cfg.contour()
    f = manufactured_forcing_2d(cfg.beta, cfg.gamma)

    if cfg.reference == "exact":
        exact = manufactured_exact_2d(T)

        def errors(u: ComplexField) -> tuple[float, float]:
            return error_norms(u, exact, exact.gradient)
    else:
        ref = semidiscrete_separable(
            system, cfg.params, T,
            manufactured_amplitude(cfg.beta, cfg.gamma),
            manufactured_exact_2d(1.0),
        ).coeffs.real

        def errors(u: ComplexField) -> tuple[float, float]:
            d = u.coeffs.real - ref
            return (math.sqrt(d @ (system.mass @ d)),
                    math.sqrt(d @ (system.stiffness @ d)))

    l2, h1 = [], []
    for n in cfg.calN_list:
        if cfg.partition == "geometric":
            partition = geometric_partition(T, n, cfg.gamma)
        else:
            partition = uniform_partition(T, n)
        u = solve_nonhomogeneous(
            system, cfg.params, contour, partition, f, contour_sign=cfg.contour_sign
        )
        e = errors(u)
        l2.append(e[0])
        h1.append(e[1])

    return _with_rates([float(n) for n in cfg.calN_list], l2, h1)


def solve_field(cfg: ExperimentConfig) -> ComplexField:
    """Single solve on the finest level of *cfg*, for dumping the field."""
    t = float(cfg.single("t_final"))
    level = int(cfg.single("levels"))

    if cfg.problem == "hom-1d":
        system = build_system(1, level)
        v = l2_project(system, lambda x: np.ones_like(x))
        return propagate_homogeneous(
            system, cfg.params, cfg.contour(), t, v, contour_sign=cfg.contour_sign
        )
    if cfg.problem == "hom-2d":
        system = build_system(2, level)
        v = l2_project(system, exact_solution_2d_eigen(0.0, cfg.beta, cfg.gamma).profile)
        return propagate_homogeneous(
            system, cfg.params, cfg.contour(), t, v, contour_sign=cfg.contour_sign
        )
    if cfg.problem == "nonhom-2d":
        system = build_system(2, level)
        n = int(cfg.single("calN_list"))
        partition = (geometric_partition(t, n, cfg.gamma) if cfg.partition == "geometric"
                     else uniform_partition(t, n))
        return solve_nonhomogeneous(
            system, cfg.params, cfg.contour(), partition,
            manufactured_forcing_2d(cfg.beta, cfg.gamma),
            contour_sign=cfg.contour_sign,
        )
    raise ValueError(f"solve does not support problem '{cfg.problem}'")


# }}}
