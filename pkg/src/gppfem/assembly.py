"""Sparse assembly of mass, stiffness, weighted-mass and load terms.

All bilinear forms on one space share a single canonical CSR pattern whose
entry order is fixed once per space (stable lexsort of the scattered cell
contributions).  Repeated assemblies, notably the coefficient-weighted mass
matrix rebuilt every time step, then reduce to one einsum plus one
``np.add.reduceat`` and are bit-reproducible.  Element kernels are
symmetrized exactly, which together with the fixed accumulation order makes
every assembled matrix satisfy A == A.T entrywise.
"""

import numpy as np
from scipy.sparse import csr_matrix

from .fem import _eval_pointwise


class CsrPattern:
    """Canonical CSR pattern of one space's cell-block sparsity."""

    def __init__(self, space):
        conn = space.connectivity
        nloc = conn.shape[1]
        rows = np.repeat(conn, nloc, axis=1).ravel()
        cols = np.tile(conn, (1, nloc)).ravel()
        order = np.lexsort((cols, rows))
        rs, cs = rows[order], cols[order]
        first = np.empty(rs.size, dtype=bool)
        first[0] = True
        first[1:] = (rs[1:] != rs[:-1]) | (cs[1:] != cs[:-1])
        self.order = order
        self.group_starts = np.flatnonzero(first)
        self.indices = cs[self.group_starts]
        counts = np.bincount(rs[self.group_starts], minlength=space.ndof)
        self.indptr = np.concatenate([[0], np.cumsum(counts)])
        self.shape = (space.ndof, space.ndof)

    def matrix_from_kernels(self, kernels):
        """CSR matrix from per-cell kernels of shape (ncells, nloc, nloc)."""
        data = kernels.reshape(-1)[self.order]
        summed = np.add.reduceat(data, self.group_starts)
        return csr_matrix((summed, self.indices.copy(), self.indptr.copy()), shape=self.shape)


def _pattern(space):
    pat = getattr(space, "_csr_pattern", None)
    if pat is None:
        pat = CsrPattern(space)
        space._csr_pattern = pat
    return pat


def _symmetrize(kernels):
    return 0.5 * (kernels + np.swapaxes(kernels, -1, -2))


def assemble_mass(space):
    """Mass matrix M_ij = int phi_i phi_j dx."""
    N, _ = space.basis_assembly
    w = space.quad_assembly.weights
    ref = _symmetrize(np.einsum("q,qi,qj->ij", w, N, N))
    kernels = space.detj[:, None, None] * ref[None, :, :]
    return _pattern(space).matrix_from_kernels(kernels)


def assemble_stiffness(space):
    """Stiffness matrix K_ij = int grad phi_i . grad phi_j dx."""
    _, dN = space.basis_assembly
    w = space.quad_assembly.weights
    grads = np.einsum("kde,qie->kqid", space.invjt, dN)
    kernels = np.einsum("q,kqid,kqjd->kij", w, grads, grads)
    kernels = _symmetrize(kernels) * space.detj[:, None, None]
    return _pattern(space).matrix_from_kernels(kernels)


def _weighted_ref_blocks(space):
    blocks = getattr(space, "_weighted_blocks", None)
    if blocks is None:
        N, _ = space.basis_assembly
        w = space.quad_assembly.weights
        blocks = _symmetrize(np.einsum("q,qi,qj->qij", w, N, N))
        space._weighted_blocks = blocks
    return blocks


def assemble_weighted_mass(space, c):
    """Weighted mass matrix W_ij = int c_h phi_i phi_j dx.

    The coefficient is the finite element function itself, evaluated from its
    basis expansion at the assembly quadrature points; the degree-3k rule
    integrates the product exactly, which the discrete conservation laws
    depend on.
    """
    if c.space is not space:
        raise ValueError("coefficient field lives on a different space")
    if c.kind != "real":
        raise ValueError("weighted mass needs a real coefficient field")
    cq = space.values_at(c.values, space.basis_assembly[0])
    kernels = np.einsum("kq,qij->kij", cq * space.detj[:, None], _weighted_ref_blocks(space))
    return _pattern(space).matrix_from_kernels(kernels)


def assemble_density_load(space, psi):
    """Load vector b_i = int |psi_h|^2 phi_i dx (assembly rule, exact)."""
    if psi.space is not space:
        raise ValueError("field lives on a different space")
    N, _ = space.basis_assembly
    w = space.quad_assembly.weights
    vals = space.values_at(psi.values, N)
    dens = vals.real**2 + vals.imag**2 if np.iscomplexobj(vals) else vals**2
    cellwise = np.einsum("kq,qi->ki", dens * (space.detj[:, None] * w[None, :]), N)
    return np.bincount(space.connectivity.ravel(), weights=cellwise.ravel(), minlength=space.ndof)


def assemble_load(space, f):
    """Load vector b_i = int f phi_i dx with the error-grade rule."""
    N, _ = space.basis_error
    w = space.quad_error.weights
    coords = space.quad_points_physical(space.quad_error)
    vals = np.asarray(_eval_pointwise(f, coords))
    vals = np.broadcast_to(vals, coords.shape[:2])
    cellwise = np.einsum("kq,qi->ki", vals * (space.detj[:, None] * w[None, :]), N)
    conn = space.connectivity.ravel()
    if np.iscomplexobj(cellwise):
        flat = cellwise.ravel()
        re = np.bincount(conn, weights=flat.real, minlength=space.ndof)
        im = np.bincount(conn, weights=flat.imag, minlength=space.ndof)
        return re + 1j * im
    return np.bincount(conn, weights=cellwise.ravel(), minlength=space.ndof)
