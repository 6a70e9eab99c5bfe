"""Uniform P1 finite elements on the unit interval and the unit square.

Only interior (homogeneous Dirichlet) degrees of freedom are kept. Pointwise
functions are called with one coordinate array per space dimension, i.e.
``f(x)`` in 1D and ``f(x1, x2)`` in 2D.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = [
    "ComplexField",
    "FemResourceError",
    "FemSystem",
    "ShiftedSolveError",
    "build_system",
    "error_norms",
    "evaluate",
    "h1_seminorm",
    "l2_norm",
    "l2_project",
    "load_vector",
    "shifted_solve",
]

PointFunction = Callable[..., np.ndarray]

#: largest number of unknowns :func:`build_system` agrees to assemble
MAX_DOFS = 2_000_000
#: relative residual required from :func:`shifted_solve`
RESIDUAL_TOL = 1.0e-12


class FemResourceError(MemoryError):
    pass


class ShiftedSolveError(RuntimeError):
    def __init__(self, message: str, condition: float) -> None:
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


@dataclass(frozen=True, eq=False)
class FemSystem:
    """Assembled mass and stiffness forms on a uniform mesh.

    .. attribute:: vertices

        ``(nvertices, dim)`` coordinates of every mesh vertex, including the
        boundary ones.

    .. attribute:: elements

        ``(nelements, dim + 1)`` vertex indices of each simplex.

    .. attribute:: vertex_dof

        degree of freedom of each vertex, ``-1`` on the boundary.
    """

    dimension: int
    level: int
    h: float
    mass: sp.csr_matrix
    stiffness: sp.csr_matrix
    vertices: np.ndarray
    elements: np.ndarray
    vertex_dof: np.ndarray
    node_coords: np.ndarray = field(repr=False)

    @property
    def num_dofs(self) -> int:
        return self.mass.shape[0]


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Coefficients of a finite element function in the nodal basis."""

    coeffs: np.ndarray
    system: FemSystem

    def __post_init__(self) -> None:
        if self.coeffs.shape != (self.system.num_dofs,):
            raise ValueError(
                f"field has shape {self.coeffs.shape}, "
                f"system has {self.system.num_dofs} dofs"
            )

    @property
    def real(self) -> ComplexField:
        return ComplexField(self.coeffs.real.astype(np.float64), self.system)

    def __add__(self, other: ComplexField) -> ComplexField:
        if other.system is not self.system:
            raise ValueError("fields live on different systems")
        return ComplexField(self.coeffs + other.coeffs, self.system)

    def __sub__(self, other: ComplexField) -> ComplexField:
        if other.system is not self.system:
            raise ValueError("fields live on different systems")
        return ComplexField(self.coeffs - other.coeffs, self.system)

    def __mul__(self, a: complex) -> ComplexField:
        return ComplexField(a * self.coeffs, self.system)

    __rmul__ = __mul__


# {{{ mesh and assembly


def _mesh_1d(n: int) -> tuple[np.ndarray, np.ndarray]:
    vertices = np.linspace(0.0, 1.0, n + 1).reshape(-1, 1)
    elements = np.stack([np.arange(n), np.arange(1, n + 1)], axis=1)
    return vertices, elements


def _mesh_2d(n: int) -> tuple[np.ndarray, np.ndarray]:
    # every cell of the n x n grid is cut along its (0,0)-(1,1) diagonal
    x = np.linspace(0.0, 1.0, n + 1)
    x1, x2 = np.meshgrid(x, x, indexing="ij")
    vertices = np.stack([x1.ravel(), x2.ravel()], axis=1)

    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    i, j = i.ravel(), j.ravel()
    v00 = i * (n + 1) + j
    v10 = (i + 1) * (n + 1) + j
    v01 = i * (n + 1) + j + 1
    v11 = (i + 1) * (n + 1) + j + 1

    lower = np.stack([v00, v10, v11], axis=1)
    upper = np.stack([v00, v11, v01], axis=1)
    return vertices, np.concatenate([lower, upper], axis=0)


def _element_geometry(
    vertices: np.ndarray, elements: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Volumes and barycentric gradients ``(nel, dim + 1, dim)``."""
    coords = vertices[elements]
    jac = (coords[:, 1:, :] - coords[:, :1, :]).transpose(0, 2, 1)
    det = np.linalg.det(jac)
    dim = vertices.shape[1]
    volume = np.abs(det) / (1.0 if dim == 1 else 2.0)

    # gradients of the reference hat functions mapped by J^{-T}
    ref = np.vstack([-np.ones((1, dim)), np.eye(dim)])
    jinv = np.linalg.inv(jac)
    grads = np.einsum("ad,edk->eak", ref, jinv)
    return volume, grads


def _assemble(
    vertices: np.ndarray, elements: np.ndarray, vertex_dof: np.ndarray, ndofs: int
) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    dim = vertices.shape[1]
    nloc = dim + 1
    volume, grads = _element_geometry(vertices, elements)

    kloc = volume[:, None, None] * np.einsum("eak,ebk->eab", grads, grads)
    if dim == 1:
        mref = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
    else:
        mref = (np.ones((3, 3)) + np.eye(3)) / 12.0
    mloc = volume[:, None, None] * mref[None, :, :]

    dofs = vertex_dof[elements]
    rows = np.repeat(dofs, nloc, axis=1).ravel()
    cols = np.tile(dofs, (1, nloc)).ravel()
    keep = (rows >= 0) & (cols >= 0)

    def to_csr(loc: np.ndarray) -> sp.csr_matrix:
        mat = sp.coo_matrix(
            (loc.ravel()[keep], (rows[keep], cols[keep])), shape=(ndofs, ndofs)
        )
        return mat.tocsr()

    return to_csr(mloc), to_csr(kloc)


def build_system(dimension: int, level: int) -> FemSystem:
    r"""Assemble P1 mass and stiffness matrices for :math:`L = -\Delta`.

    The mesh is uniform with :math:`2^{\text{level}}` cells per direction; in
    2D each square cell is split into two right triangles, so that the mesh
    size is :math:`2^{-\text{level}}\sqrt{2}`.
    """
    if dimension not in (1, 2):
        raise ValueError(f"dimension must be 1 or 2: got {dimension}")
    if level < 1:
        raise ValueError(f"level must be at least 1: got {level}")

    n = 2**level
    ndofs = (n - 1) ** dimension
    if ndofs > MAX_DOFS:
        raise FemResourceError(
            f"level {level} in {dimension}D needs {ndofs} unknowns (limit {MAX_DOFS})"
        )

    if dimension == 1:
        vertices, elements = _mesh_1d(n)
        h = 1.0 / n
    else:
        vertices, elements = _mesh_2d(n)
        h = np.sqrt(2.0) / n

    interior = np.all((vertices > 0.0) & (vertices < 1.0), axis=1)
    vertex_dof = np.full(vertices.shape[0], -1, dtype=np.int64)
    vertex_dof[interior] = np.arange(ndofs)

    mass, stiffness = _assemble(vertices, elements, vertex_dof, ndofs)
    return FemSystem(
        dimension=dimension,
        level=level,
        h=h,
        mass=mass,
        stiffness=stiffness,
        vertices=vertices,
        elements=elements,
        vertex_dof=vertex_dof,
        node_coords=vertices[interior],
    )


# }}}


# {{{ solves


def _as_banded(mat: sp.csr_matrix) -> np.ndarray:
    n = mat.shape[0]
    ab = np.zeros((3, n), dtype=mat.dtype)
    ab[0, 1:] = mat.diagonal(1)
    ab[1, :] = mat.diagonal(0)
    ab[2, :-1] = mat.diagonal(-1)
    return ab


def shifted_solve(system: FemSystem, z: complex, rhs: np.ndarray) -> np.ndarray:
    r"""Solve :math:`(z \widetilde{M} + \widetilde{A}) U = V`.

    Tridiagonal elimination in 1D and a sparse LU factorization in 2D. The
    relative residual is checked against :data:`RESIDUAL_TOL`; one step of
    iterative refinement is attempted before giving up.

    :raises ShiftedSolveError: if the shifted matrix is (numerically)
        singular.
    """
    rhs = np.asarray(rhs, dtype=np.complex128)
    if rhs.shape != (system.num_dofs,):
        raise ValueError(f"rhs has shape {rhs.shape}, expected ({system.num_dofs},)")

    rnorm = np.linalg.norm(rhs)
    if rnorm == 0.0:
        return np.zeros_like(rhs)

    mat = (z * system.mass + system.stiffness).astype(np.complex128)
    if system.dimension == 1:
        ab = _as_banded(mat)

        def solve(b: np.ndarray) -> np.ndarray:
            return sla.solve_banded((1, 1), ab, b, check_finite=False)

        try:
            with np.errstate(divide="raise", invalid="raise"):
                u = solve(rhs)
        except (np.linalg.LinAlgError, FloatingPointError) as exc:
            raise ShiftedSolveError(f"singular shift z = {z}", np.inf) from exc
    else:
        try:
            # the pattern is symmetric: order on A + A^T
            lu = spla.splu(
                mat.tocsc(), permc_spec="MMD_AT_PLUS_A",
                options={"SymmetricMode": True},
            )
        except RuntimeError as exc:
            raise ShiftedSolveError(f"singular shift z = {z}", np.inf) from exc
        solve = lu.solve
        u = solve(rhs)

    r = rhs - mat @ u
    if np.linalg.norm(r) > RESIDUAL_TOL * rnorm:
        u = u + solve(r)
        r = rhs - mat @ u

    res = np.linalg.norm(r)
    if not np.isfinite(res) or res > RESIDUAL_TOL * rnorm:
        cond = spla.norm(mat, 1) * np.linalg.norm(u, 1) / np.linalg.norm(rhs, 1)
        raise ShiftedSolveError(
            f"residual {res / rnorm:.3e} above {RESIDUAL_TOL:.0e} at z = {z}", cond
        )

    return u


def _mass_solve(system: FemSystem, rhs: np.ndarray) -> np.ndarray:
    if system.dimension == 1:
        return sla.solve_banded((1, 1), _as_banded(system.mass), rhs)
    return spla.spsolve(system.mass.tocsc(), rhs)


# }}}


# {{{ quadrature


def _gauss_rule(dim: int, npoints: int) -> tuple[np.ndarray, np.ndarray]:
    """Reference-simplex points (barycentric ``(nq, dim + 1)``) and weights.

    The 2D rule is a collapsed tensor-product Gauss rule, exact for
    polynomials of degree ``2 * npoints - 2``.
    """
    xi, wi = np.polynomial.legendre.leggauss(npoints)
    xi = 0.5 * (xi + 1.0)
    wi = 0.5 * wi
    if dim == 1:
        bary = np.stack([1.0 - xi, xi], axis=1)
        return bary, wi

    u, v = np.meshgrid(xi, xi, indexing="ij")
    wu, wv = np.meshgrid(wi, wi, indexing="ij")
    x = u.ravel()
    y = (v * (1.0 - u)).ravel()
    w = (wu * wv * (1.0 - u)).ravel()
    bary = np.stack([1.0 - x - y, x, y], axis=1)
    # reference triangle has area 1/2, weights are relative to the volume
    return bary, 2.0 * w


def _quadrature_points(
    system: FemSystem, npoints: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    bary, w = _gauss_rule(system.dimension, npoints)
    coords = system.vertices[system.elements]
    points = np.einsum("qa,ead->eqd", bary, coords)
    volume, _ = _element_geometry(system.vertices, system.elements)
    return points, bary, volume[:, None] * w[None, :]


def _call(f: PointFunction, points: np.ndarray) -> np.ndarray:
    flat = points.reshape(-1, points.shape[-1])
    values = np.asarray(f(*flat.T))
    return np.broadcast_to(values, flat.shape[:1]).reshape(points.shape[:-1])


def load_vector(system: FemSystem, f: PointFunction, *, npoints: int = 3) -> np.ndarray:
    r"""Inner products :math:`(f, \varphi_i)` against the interior hat functions.

    The default rule is exact for polynomials of degree 4.
    """
    points, bary, weights = _quadrature_points(system, npoints)
    values = _call(f, points)
    local = np.einsum("eq,eq,qa->ea", weights, values, bary)

    dofs = system.vertex_dof[system.elements]
    mask = dofs >= 0
    out = np.zeros(system.num_dofs, dtype=np.result_type(local, np.float64))
    np.add.at(out, dofs[mask], local[mask])
    return out


def l2_project(system: FemSystem, f: PointFunction) -> ComplexField:
    """:math:`L^2` projection onto the finite element space."""
    b = load_vector(system, f)
    return ComplexField(np.asarray(_mass_solve(system, b), dtype=np.complex128), system)


# }}}


# {{{ norms


def l2_norm(u: ComplexField) -> float:
    c = u.coeffs
    return float(np.sqrt(max(np.real(np.vdot(c, u.system.mass @ c)), 0.0)))


def h1_seminorm(u: ComplexField) -> float:
    c = u.coeffs
    return float(np.sqrt(max(np.real(np.vdot(c, u.system.stiffness @ c)), 0.0)))


def _vertex_values(u: ComplexField) -> np.ndarray:
    values = np.zeros(u.system.vertices.shape[0], dtype=u.coeffs.dtype)
    interior = u.system.vertex_dof >= 0
    values[interior] = u.coeffs[u.system.vertex_dof[interior]]
    return values


def evaluate(u: ComplexField, *coords: np.ndarray) -> np.ndarray:
    """Evaluate the finite element function at arbitrary points."""
    system = u.system
    values = _vertex_values(u)
    n = 2**system.level

    if system.dimension == 1:
        (x,) = coords
        return np.interp(x, system.vertices[:, 0], values.real) + 1j * np.interp(
            x, system.vertices[:, 0], values.imag
        )

    x1, x2 = np.broadcast_arrays(*coords)
    i = np.clip(np.floor(x1 * n).astype(np.int64), 0, n - 1)
    j = np.clip(np.floor(x2 * n).astype(np.int64), 0, n - 1)
    a = x1 * n - i
    b = x2 * n - j

    def vertex(di: int, dj: int) -> np.ndarray:
        return values[(i + di) * (n + 1) + (j + dj)]

    lower = a >= b
    out = np.where(
        lower,
        (1 - a) * vertex(0, 0) + (a - b) * vertex(1, 0) + b * vertex(1, 1),
        (1 - b) * vertex(0, 0) + (b - a) * vertex(0, 1) + a * vertex(1, 1),
    )
    return out


def error_norms(
    u: ComplexField,
    exact: PointFunction,
    exact_grad: PointFunction,
    *,
    npoints: int = 4,
) -> tuple[float, float]:
    r"""Return :math:`\|u - u_h\|_{L^2}` and :math:`\|\nabla(u - u_h)\|_{L^2}`.

    Both integrals are computed element by element with a Gauss rule that is
    exact for polynomials of degree 6 by default.

    :arg exact_grad: returns the gradient as an array (1D) or a sequence of
        ``dim`` arrays.
    """
    system = u.system
    points, bary, weights = _quadrature_points(system, npoints)
    values = _vertex_values(u)[system.elements]

    uh = np.einsum("qa,ea->eq", bary, values)
    diff = _call(exact, points) - uh

    _, grads = _element_geometry(system.vertices, system.elements)
    guh = np.einsum("ea,eak->ek", values, grads)

    flat = points.reshape(-1, points.shape[-1])
    g = np.asarray(exact_grad(*flat.T))
    g = g.reshape(system.dimension, *points.shape[:-1])
    gdiff = g - guh.T[:, :, None]

    l2 = np.sum(weights * np.abs(diff) ** 2)
    h1 = np.sum(weights[None] * np.abs(gdiff) ** 2)
    return float(np.sqrt(l2)), float(np.sqrt(h1))


# }}}
