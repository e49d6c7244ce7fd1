"""Periodic Lagrange finite element spaces of degree 1 and 2.

Degrees of freedom sit on a uniform node lattice with k nodes per cell and
direction; periodic identification is plain modular arithmetic on lattice
indices, so two spaces built on the same mesh are bit-identical.  Global DOF
numbering is lexicographic in the node coordinates (x-major in 2D).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_jacobi

SUPPORTED_DEGREES = (1, 2)


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureRule:
    """Quadrature on the reference cell ([0,1] or the unit triangle).

    ``degree`` is the highest total polynomial degree integrated exactly;
    weights are positive and sum to the reference-cell measure.
    """

    points: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    degree: int

    @property
    def num_points(self):
        return self.weights.size


def gauss_interval(min_degree):
    """Gauss-Legendre rule on [0,1] exact for the requested degree."""
    npts = (min_degree + 2) // 2
    xi, w = np.polynomial.legendre.leggauss(npts)
    points = (xi + 1.0)[:, None] / 2.0
    weights = w / 2.0
    return QuadratureRule(points=points, weights=weights, degree=2 * npts - 1)


def gauss_triangle(min_degree):
    """Tensor rule on the unit triangle exact for the requested total degree.

    Built from the collapsed-square (Duffy) map x = u(1-v), y = v with a
    Gauss-Legendre rule in u and a Gauss-Jacobi rule carrying the (1-v)
    weight in v.  An n x n rule is exact for total degree 2n-1.
    """
    n = (min_degree + 2) // 2
    xu, wu = np.polynomial.legendre.leggauss(n)
    u = (xu + 1.0) / 2.0
    wu = wu / 2.0
    xv, wv = roots_jacobi(n, 1.0, 0.0)
    v = (xv + 1.0) / 2.0
    wv = wv / 4.0
    uu, vv = np.meshgrid(u, v, indexing="ij")
    points = np.column_stack([(uu * (1.0 - vv)).ravel(), vv.ravel()])
    weights = np.outer(wu, wv).ravel()
    return QuadratureRule(points=points, weights=weights, degree=2 * n - 1)


def reference_rule(dim, min_degree):
    return gauss_interval(min_degree) if dim == 1 else gauss_triangle(min_degree)


# ---------------------------------------------------------------------------
# reference Lagrange bases
# ---------------------------------------------------------------------------

def tabulate_basis(dim, degree, points):
    """Values and gradients of the reference Lagrange basis.

    Returns ``(N, dN)`` with shapes (npts, nloc) and (npts, nloc, dim).
    Local node order: vertices first, then edge midpoints (1D: left vertex,
    right vertex, midpoint; 2D: v0,v1,v2, m01, m12, m02).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if dim == 1:
        x = pts[:, 0]
        one = np.ones_like(x)
        if degree == 1:
            N = np.stack([1.0 - x, x], axis=1)
            dN = np.stack([-one, one], axis=1)[:, :, None]
        else:
            N = np.stack(
                [(1.0 - x) * (1.0 - 2.0 * x), x * (2.0 * x - 1.0), 4.0 * x * (1.0 - x)],
                axis=1,
            )
            dN = np.stack([4.0 * x - 3.0, 4.0 * x - 1.0, 4.0 - 8.0 * x], axis=1)[:, :, None]
        return N, dN

    x, y = pts[:, 0], pts[:, 1]
    lam = np.stack([1.0 - x - y, x, y], axis=1)
    dlam = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    if degree == 1:
        N = lam
        dN = np.broadcast_to(dlam, (pts.shape[0], 3, 2)).copy()
        return N, dN
    pairs = [(0, 1), (1, 2), (0, 2)]
    N = np.empty((pts.shape[0], 6))
    dN = np.empty((pts.shape[0], 6, 2))
    for i in range(3):
        N[:, i] = lam[:, i] * (2.0 * lam[:, i] - 1.0)
        dN[:, i] = (4.0 * lam[:, i] - 1.0)[:, None] * dlam[i]
    for m, (i, j) in enumerate(pairs):
        N[:, 3 + m] = 4.0 * lam[:, i] * lam[:, j]
        dN[:, 3 + m] = 4.0 * (lam[:, i][:, None] * dlam[j] + lam[:, j][:, None] * dlam[i])
    return N, dN


def _local_lattice_offsets(dim, degree):
    """Local node positions in lattice units (degree steps per cell edge)."""
    if dim == 1:
        if degree == 1:
            return np.array([[0], [1]])
        return np.array([[0], [2], [1]])
    if degree == 1:
        lower = np.array([[0, 0], [1, 0], [1, 1]])
        upper = np.array([[0, 0], [1, 1], [0, 1]])
    else:
        lower = np.array([[0, 0], [2, 0], [2, 2], [1, 0], [2, 1], [1, 1]])
        upper = np.array([[0, 0], [2, 2], [0, 2], [1, 1], [1, 2], [0, 1]])
    return lower, upper


# ---------------------------------------------------------------------------
# spaces and fields
# ---------------------------------------------------------------------------

class FeSpace:
    """Degree-k periodic Lagrange space over a uniform Mesh.

    Precomputes everything the assembly and error paths need: connectivity,
    affine cell geometry, and reference basis tables at the assembly rule
    (exact for degree 3k integrands) and the error rule (degree >= 2k+4).
    Instances are immutable after construction and safe to share.
    """

    def __init__(self, mesh, degree):
        if degree not in SUPPORTED_DEGREES:
            raise ValueError(f"unsupported degree {degree}, expected one of {SUPPORTED_DEGREES}")
        self.mesh = mesh
        self.degree = int(degree)
        self._build_connectivity()
        self._build_geometry()
        self.quad_assembly = reference_rule(mesh.dim, 3 * self.degree)
        self.quad_error = reference_rule(mesh.dim, 2 * self.degree + 4)
        self.basis_assembly = tabulate_basis(mesh.dim, self.degree, self.quad_assembly.points)
        self.basis_error = tabulate_basis(mesh.dim, self.degree, self.quad_error.points)
        self._build_integral_weights()
        self._mass_solver = None  # lazy, set by l2_project

    # -- construction ------------------------------------------------------

    def _build_connectivity(self):
        mesh, k = self.mesh, self.degree
        if mesh.dim == 1:
            n = mesh.divisions[0]
            self.ndof = k * n
            offs = _local_lattice_offsets(1, k)[:, 0]
            cell_ids = np.arange(n)[:, None]
            self.connectivity = (k * cell_ids + offs[None, :]) % self.ndof
            L = mesh.extents[0]
            self.dof_coords = (np.arange(self.ndof) * (L / self.ndof))[:, None]
            return
        nx, ny = mesh.divisions
        mx, my = k * nx, k * ny
        self.ndof = mx * my
        lower, upper = _local_lattice_offsets(2, k)
        cx, cy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
        cx, cy = cx.ravel()[:, None], cy.ravel()[:, None]

        def glob(offsets):
            gx = (k * cx + offsets[None, :, 0]) % mx
            gy = (k * cy + offsets[None, :, 1]) % my
            return gx * my + gy

        self.connectivity = np.concatenate([glob(lower), glob(upper)], axis=0)
        gx, gy = np.divmod(np.arange(self.ndof), my)
        Lx, Ly = mesh.extents
        self.dof_coords = np.column_stack([gx * (Lx / mx), gy * (Ly / my)])

    def _build_geometry(self):
        pts = self.mesh.cell_vertices()
        self.cell_origin = pts[:, 0, :]
        if self.mesh.dim == 1:
            jac = pts[:, 1, :] - pts[:, 0, :]  # (ncells, 1)
            self.jac = jac[:, :, None]
            self.detj = np.abs(jac[:, 0])
            self.invjt = (1.0 / jac[:, 0])[:, None, None]
            return
        e1 = pts[:, 1] - pts[:, 0]
        e2 = pts[:, 2] - pts[:, 0]
        jac = np.stack([e1, e2], axis=2)  # columns are the edge vectors
        det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        inv = np.empty_like(jac)
        inv[:, 0, 0] = jac[:, 1, 1]
        inv[:, 0, 1] = -jac[:, 0, 1]
        inv[:, 1, 0] = -jac[:, 1, 0]
        inv[:, 1, 1] = jac[:, 0, 0]
        inv /= det[:, None, None]
        self.jac = jac
        self.detj = np.abs(det)
        self.invjt = np.swapaxes(inv, 1, 2)

    def _build_integral_weights(self):
        # load vector of f=1 under the assembly rule; equals the mass-matrix
        # row sums because the basis sums to one at every quadrature point
        N, _ = self.basis_assembly
        w = self.quad_assembly.weights
        cellwise = self.detj[:, None] * (w @ N)[None, :]
        self.int_weights = np.bincount(
            self.connectivity.ravel(), weights=cellwise.ravel(), minlength=self.ndof
        )
        self.volume = float(self.int_weights.sum())

    # -- helpers used by assembly, diagnostics and the harness --------------

    @property
    def num_cells(self):
        return self.mesh.num_cells

    @property
    def nloc(self):
        return self.connectivity.shape[1]

    def quad_points_physical(self, rule):
        """Physical coordinates of a reference rule on every cell, (ncells, nq, dim)."""
        ref = rule.points
        return self.cell_origin[:, None, :] + np.einsum("kde,qe->kqd", self.jac, ref)

    def values_at(self, coefficients, basis_values):
        """Field values at tabulated reference points on every cell, (ncells, npts)."""
        return np.einsum("ki,qi->kq", coefficients[self.connectivity], basis_values)


def build_space(mesh, k):
    """Degree-k periodic Lagrange space on a mesh (k in {1, 2})."""
    return FeSpace(mesh, k)


def default_quadrature(space, purpose):
    """The space's assembly- or error-grade quadrature rule."""
    if purpose == "assembly":
        return space.quad_assembly
    if purpose == "error":
        return space.quad_error
    raise ValueError(f"unknown quadrature purpose {purpose!r}")


@dataclass
class Field:
    """Coefficient vector over the global DOFs of a space."""

    space: FeSpace
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != (self.space.ndof,):
            raise ValueError(
                f"coefficient vector has shape {self.values.shape}, expected ({self.space.ndof},)"
            )

    @property
    def kind(self):
        return "complex" if np.iscomplexobj(self.values) else "real"

    def copy(self):
        return Field(self.space, self.values.copy())


def zero_field(space, kind="real"):
    dtype = np.complex128 if kind == "complex" else np.float64
    return Field(space, np.zeros(space.ndof, dtype=dtype))


def evaluate(field, cell, ref_point):
    """Evaluate a field at a reference point of one cell."""
    space = field.space
    if not 0 <= cell < space.num_cells:
        raise ValueError(f"cell index {cell} out of range [0, {space.num_cells})")
    N, _ = tabulate_basis(space.mesh.dim, space.degree, np.atleast_2d(ref_point))
    local = field.values[space.connectivity[cell]]
    return (N[0] * local).sum()


def _eval_pointwise(f, coords):
    """Call f on unpacked coordinate arrays, f(x) in 1D or f(x, y) in 2D."""
    return f(*(coords[..., d] for d in range(coords.shape[-1])))


def l2_project(space, f, kind="real"):
    """L2 projection of a pointwise function onto the space.

    Solves M u = b with b_i = int f phi_i computed by the error-grade rule,
    so quadrature error stays below the approximation error for the smooth
    data used in the experiments.
    """
    from . import assembly, linalg

    b = assembly.assemble_load(space, f)
    if kind == "complex":
        b = b.astype(np.complex128)
    elif np.iscomplexobj(b):
        raise ValueError("complex-valued data passed to a real projection")
    if space._mass_solver is None:
        M = assembly.assemble_mass(space)
        try:
            space._mass_solver = linalg.spd_factorize(M)
        except linalg.SolverFailure as exc:  # mass matrix is SPD by construction
            raise RuntimeError("mass matrix factorization failed; assembly is broken") from exc
    if np.iscomplexobj(b):
        u = space._mass_solver.solve(b.real) + 1j * space._mass_solver.solve(b.imag)
    else:
        u = space._mass_solver.solve(b)
    return Field(space, u)


def field_mean(field):
    """Domain average of a real field, via the mass-matrix row-sum vector."""
    if field.kind != "real":
        raise ValueError("field_mean expects a real field")
    space = field.space
    return float(space.int_weights @ field.values) / space.volume
