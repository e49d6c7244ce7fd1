"""Conserved quantities, compatibility residual, L2 errors and rate tables.

Pure functions over immutable fields and operators.  The conserved energy
mixes the two half-level density pairs and potentials around level n,
matching the stencil that the scheme conserves exactly:

    E^n = 1/2 int |grad psi+|^2 + |grad psi-|^2
        + g/2 int (Z+' Z+ + Z-' Z-) + G/2 int (Z-' Z+ + Z+' Z-)
        + 1/(8 pi) int grad phi . grad phi'

with primes marking level n+1/2 and bare symbols level n-1/2.
"""

from dataclasses import dataclass

import numpy as np

from .fem import _eval_pointwise

EIGHT_PI = 8.0 * np.pi


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Per-step conserved quantities and optional errors."""

    n: int
    t: float
    mass_plus: float
    mass_minus: float
    energy: float
    compat_residual: float
    err_psi_plus: float = None
    err_psi_minus: float = None
    err_phi: float = None


def discrete_mass(psi, M):
    """Mass of one species, Re(psi^H M psi); the imaginary part must vanish."""
    value = np.vdot(psi.values, M @ psi.values)
    assert abs(value.imag) <= 1e-13 * max(abs(value.real), np.finfo(float).tiny)
    return float(value.real)


def _pairing(M, a, b):
    return float(a @ (M @ b))


def discrete_energy(
    psi_plus,
    psi_minus,
    z_plus_next,
    z_minus_next,
    z_plus_prev,
    z_minus_prev,
    phi_next,
    phi_prev,
    params,
    operators,
):
    """Conserved energy at one level from its two half-level neighborhoods.

    The potential term is dropped when q = 0; otherwise both half-level
    potentials must be present.
    """
    M, K = operators.M, operators.K
    grad = np.vdot(psi_plus.values, K @ psi_plus.values).real
    grad += np.vdot(psi_minus.values, K @ psi_minus.values).real
    zp_n, zm_n = z_plus_next.values, z_minus_next.values
    zp_p, zm_p = z_plus_prev.values, z_minus_prev.values
    self_term = _pairing(M, zp_n, zp_p) + _pairing(M, zm_n, zm_p)
    cross_term = _pairing(M, zm_n, zp_p) + _pairing(M, zp_n, zm_p)
    energy = 0.5 * grad + 0.5 * params.g * self_term + 0.5 * params.G * cross_term
    if params.q != 0:
        if phi_next is None or phi_prev is None:
            raise ValueError("energy with q != 0 needs both half-level potentials")
        energy += _pairing(K, phi_prev.values, phi_next.values) / EIGHT_PI
    return energy


def l2_error(field, exact, t):
    """L2 norm of field - exact(., t) via the error-grade quadrature."""
    space = field.space
    rule = space.quad_error
    vals = space.values_at(field.values, space.basis_error[0])
    coords = space.quad_points_physical(rule)
    args = [coords[..., d] for d in range(space.mesh.dim)] + [t]
    ref = np.broadcast_to(np.asarray(exact(*args)), vals.shape)
    diff2 = np.abs(vals - ref) ** 2
    return float(np.sqrt(np.einsum("kq,q,k->", diff2, rule.weights, space.detj)))


def rate_table(errors):
    """Observed convergence rates for a halving resolution sequence.

    Input rows are (resolution, error); output rows gain a rate column
    log2(e_coarse / e_fine), None on the first row.
    """
    if len(errors) < 2:
        raise ValueError("need at least two rows to compute rates")
    res = [float(r) for r, _ in errors]
    for coarse, fine in zip(res[:-1], res[1:]):
        if abs(coarse / fine - 2.0) > 1e-9:
            raise ValueError(f"resolutions must halve, got {coarse} -> {fine}")
    out = [(res[0], float(errors[0][1]), None)]
    for (_, e_prev), (r, e) in zip(errors[:-1], errors[1:]):
        out.append((float(r), float(e), float(np.log2(e_prev / e))))
    return out


def make_record(
    n,
    state,
    z_plus_half,
    z_minus_half,
    phi_prev,
    phi_half,
    params,
    operators,
    exact_psi_plus=None,
    exact_psi_minus=None,
    exact_phi=None,
):
    """Assemble one DiagnosticsRecord at level n.

    z/phi arguments are the freshly computed n+1/2 values; the state still
    holds the n-1/2 pair, with phi_prev supplied separately because the
    level-0 record needs the potential induced by the initial densities.
    """
    t = n * params.tau
    space = operators.space
    mass_p = discrete_mass(state.psi_plus, operators.M)
    mass_m = discrete_mass(state.psi_minus, operators.M)
    compat = float(space.int_weights @ (z_plus_half.values - z_minus_half.values))
    energy = discrete_energy(
        state.psi_plus,
        state.psi_minus,
        z_plus_half,
        z_minus_half,
        state.z_plus,
        state.z_minus,
        phi_half,
        phi_prev,
        params,
        operators,
    )
    err_p = err_m = err_phi = None
    if exact_psi_plus is not None:
        err_p = l2_error(state.psi_plus, exact_psi_plus, t)
    if exact_psi_minus is not None:
        err_m = l2_error(state.psi_minus, exact_psi_minus, t)
    if exact_phi is not None and phi_prev is not None:
        err_phi = l2_error(phi_prev, exact_phi, max(t - 0.5 * params.tau, 0.0))
    return DiagnosticsRecord(
        n=n,
        t=t,
        mass_plus=mass_p,
        mass_minus=mass_m,
        energy=energy,
        compat_residual=compat,
        err_psi_plus=err_p,
        err_psi_minus=err_m,
        err_phi=err_phi,
    )
