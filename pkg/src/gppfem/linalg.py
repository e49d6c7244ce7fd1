"""Direct solvers for the three per-step system families.

Real SPD (mass), complex non-Hermitian (wave updates) and the singular
periodic Poisson operator with its zero-mean constraint.  Everything is
backed by sparse LU; factorizations are immutable and reusable across steps.
Each solve verifies its residual contract and attempts one refinement pass
before giving up.
"""

import numpy as np
from scipy.sparse import bmat, csc_matrix, csr_matrix
from scipy.sparse.linalg import splu

SPD_RTOL = 1e-12
COMPLEX_RTOL = 1e-11
POISSON_RTOL = 1e-11
COMPAT_RTOL = 1e-10
MEAN_TOL = 1e-12


class SolverFailure(RuntimeError):
    """A linear solve failed to meet its residual contract."""


class CompatibilityError(RuntimeError):
    """Poisson right-hand side violates the zero-integral compatibility condition."""


def _lu(A):
    # FEM matrices here have symmetric sparsity; the AT+A minimum-degree
    # ordering gives several times less fill than the COLAMD default
    try:
        return splu(csc_matrix(A), permc_spec="MMD_AT_PLUS_A")
    except RuntimeError as exc:
        raise SolverFailure(f"sparse factorization failed: {exc}") from exc


def _checked_solve(lu, A, b, rtol, label):
    x = lu.solve(b)
    bnorm = np.linalg.norm(b)
    resid = np.linalg.norm(A @ x - b)
    if resid > rtol * bnorm:
        x = x + lu.solve(b - A @ x)
        resid = np.linalg.norm(A @ x - b)
        if resid > rtol * bnorm:
            raise SolverFailure(
                f"{label} solve residual {resid:.3e} exceeds {rtol:.1e} * ||b|| = {rtol * bnorm:.3e}"
            )
    return x


class SpdFactor:
    """LU factorization of a real SPD matrix."""

    def __init__(self, A):
        self.A = csr_matrix(A)
        self._lu = _lu(A)

    def solve(self, b):
        return _checked_solve(self._lu, self.A, np.asarray(b, dtype=float), SPD_RTOL, "SPD")


class ComplexFactor:
    """LU factorization of a complex nonsingular matrix."""

    def __init__(self, A):
        self.A = csr_matrix(A)
        self._lu = _lu(A)

    def solve(self, b):
        return _checked_solve(
            self._lu, self.A, np.asarray(b, dtype=complex), COMPLEX_RTOL, "complex"
        )


class ZeroMeanPoisson:
    """Constrained solver for K x = b with mean(x) = 0.

    The zero-mean constraint is appended as a symmetric Lagrange-multiplier
    row/column built from the integral weights, so the factorized matrix is
    nonsingular although K itself has the constants in its kernel.  An
    incompatible right-hand side shows up as a nonzero multiplier; it is
    rejected up front by the compatibility check.
    """

    def __init__(self, K, weights):
        self.K = csr_matrix(K)
        self.weights = np.asarray(weights, dtype=float)
        self.volume = float(self.weights.sum())
        m = csr_matrix(self.weights[:, None])
        self._lu = _lu(bmat([[self.K, m], [m.T, None]], format="csc"))

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        bnorm = np.linalg.norm(b)
        defect = abs(b.sum())
        if defect > COMPAT_RTOL * bnorm:
            raise CompatibilityError(
                f"right-hand side integral {defect:.3e} exceeds "
                f"{COMPAT_RTOL:.1e} * ||b|| = {COMPAT_RTOL * bnorm:.3e}"
            )
        rhs = np.concatenate([b, [0.0]])
        x = self._lu.solve(rhs)[:-1]
        resid = np.linalg.norm(self.K @ x - b)
        if resid > POISSON_RTOL * bnorm:
            raise SolverFailure(
                f"constrained Poisson residual {resid:.3e} exceeds "
                f"{POISSON_RTOL:.1e} * ||b|| = {POISSON_RTOL * bnorm:.3e}"
            )
        x -= (self.weights @ x) / self.volume
        return x


def spd_factorize(A):
    return SpdFactor(A)


def complex_factorize(A):
    return ComplexFactor(A)


def solve_spd(A, b):
    """One-shot SPD solve with residual <= 1e-12 ||b||."""
    return SpdFactor(A).solve(b)


def solve_complex(A, b):
    """One-shot complex direct solve with residual <= 1e-11 ||b||."""
    return ComplexFactor(A).solve(b)


def solve_zero_mean(K, b, weights):
    """One-shot constrained Poisson solve; see ZeroMeanPoisson."""
    return ZeroMeanPoisson(K, weights).solve(b)
