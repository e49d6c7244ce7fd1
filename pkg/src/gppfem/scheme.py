"""Relaxation Crank-Nicolson stepper for the coupled wave/potential system.

Each step is linear and fully decoupled: two independent mass solves update
the auxiliary densities by reflection about the current |psi|^2, one
constrained Poisson solve produces the zero-mean potential (skipped entirely
for q = 0), and two independent complex solves advance the wave functions
through the Crank-Nicolson average.  Mass and stiffness factorizations are
assembled once; only the coefficient-weighted mass matrix is rebuilt per
step.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix

from . import assembly, diagnostics, linalg
from .fem import Field, l2_project

FOUR_PI = 4.0 * np.pi
MASS_COMPAT_RTOL = 1e-10


class ConfigError(ValueError):
    """Problem setup that makes the continuous or discrete problem ill-posed."""


@dataclass(frozen=True)
class Params:
    """Model and stepping parameters.

    g/G are the self- and cross-interaction coefficients, q the charge
    parameter (q = 0 switches off the potential entirely), tau the time step
    and T the final time; T/tau must be integral.
    """

    g: float
    G: float
    q: float
    tau: float
    T: float

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"time step must be positive, got {self.tau}")
        if self.T < 0:
            raise ValueError(f"final time must be nonnegative, got {self.T}")
        n = round(self.T / self.tau)
        if abs(n * self.tau - self.T) > 1e-12 * max(1.0, abs(self.T)):
            raise ValueError(f"T = {self.T} is not an integer multiple of tau = {self.tau}")

    @property
    def num_steps(self):
        return round(self.T / self.tau)


@dataclass(frozen=True)
class SchemeState:
    """Time-level bundle: psi at level n, densities and potential at n - 1/2.

    phi is None before the first Poisson solve and always None when q = 0.
    """

    n: int
    psi_plus: Field
    psi_minus: Field
    z_plus: Field
    z_minus: Field
    phi: Field = None


class Operators:
    """Assembled matrices and factorizations shared by all steps.

    The complex wave systems reuse the real mass/stiffness data: every
    matrix lives on the space's canonical CSR pattern, so the left-hand side
    (i/tau) M - K/4 - W(c)/2 is formed per step by combining data arrays.
    """

    def __init__(self, space, params):
        self.space = space
        self.params = params
        self.M = assembly.assemble_mass(space)
        self.K = assembly.assemble_stiffness(space)
        self.mass = linalg.spd_factorize(self.M)
        self.wave_base = (1j / params.tau) * self.M.data - 0.25 * self.K.data
        self._poisson = None

    @property
    def poisson(self):
        if self._poisson is None:
            self._poisson = linalg.ZeroMeanPoisson(self.K, self.space.int_weights)
        return self._poisson

    def wave_matrices(self, c):
        """Left and right system matrices for one species' wave update."""
        W = assembly.assemble_weighted_mass(self.space, c)
        data = self.wave_base - 0.5 * W.data
        shape = (self.space.ndof, self.space.ndof)
        left = csr_matrix((data, W.indices, W.indptr), shape=shape)
        right = csr_matrix((-np.conj(data), W.indices, W.indptr), shape=shape)
        return left, right


def build_operators(space, params):
    return Operators(space, params)


def _interpolate(space, f, kind):
    coords = space.dof_coords
    vals = np.asarray(f(*(coords[:, d] for d in range(coords.shape[1]))))
    dtype = np.complex128 if kind == "complex" else np.float64
    return Field(space, np.broadcast_to(vals, (space.ndof,)).astype(dtype))


def initialize(space, psi0_plus, psi0_minus, params, method="interpolate"):
    """Compute the starting state from the initial wave functions.

    ``method="interpolate"`` takes nodal values of psi_0 and |psi_0|^2; it is
    the default because the reference error tables were produced this way.
    ``method="project"`` uses the L2 projection instead, the variational form
    of the initialization.  Either way the auxiliary densities start from
    |psi_0|^2 and the potential is left absent until the first step.

    Rejects initial data whose discrete masses differ by more than 1e-10
    relative; the periodic Poisson problem is unsolvable otherwise.
    """
    if method == "interpolate":
        make = lambda f, kind: _interpolate(space, f, kind)
    elif method == "project":
        make = lambda f, kind: l2_project(space, f, kind=kind)
    else:
        raise ValueError(f"unknown initialization method {method!r}")
    psi_p = make(psi0_plus, "complex")
    psi_m = make(psi0_minus, "complex")
    z_p = make(lambda *xs: np.abs(psi0_plus(*xs)) ** 2, "real")
    z_m = make(lambda *xs: np.abs(psi0_minus(*xs)) ** 2, "real")
    M = assembly.assemble_mass(space)
    mass_p = diagnostics.discrete_mass(psi_p, M)
    mass_m = diagnostics.discrete_mass(psi_m, M)
    scale = max(mass_p, mass_m, np.finfo(float).tiny)
    if abs(mass_p - mass_m) > MASS_COMPAT_RTOL * scale:
        raise ConfigError(
            f"initial masses differ: M+ = {mass_p!r}, M- = {mass_m!r}; "
            "the coupled problem requires equal masses"
        )
    return SchemeState(n=0, psi_plus=psi_p, psi_minus=psi_m, z_plus=z_p, z_minus=z_m)


def relax_density(state, operators):
    """Advance both auxiliary densities by the averaged identity.

    Z^{n+1/2} = M^{-1}(2 b(psi^n)) - Z^{n-1/2} with b the density load; the
    two species are independent.
    """
    space = operators.space
    out = []
    for psi, z_old in ((state.psi_plus, state.z_plus), (state.psi_minus, state.z_minus)):
        b = assembly.assemble_density_load(space, psi)
        out.append(Field(space, operators.mass.solve(2.0 * b) - z_old.values))
    return tuple(out)


def solve_potential(z_plus_half, z_minus_half, params, operators):
    """Zero-mean potential driven by the density imbalance (zero field if q = 0)."""
    space = operators.space
    if params.q == 0:
        return Field(space, np.zeros(space.ndof))
    rhs = (FOUR_PI * params.q) * (operators.M @ (z_plus_half.values - z_minus_half.values))
    return Field(space, operators.poisson.solve(rhs))


def advance_wave(psi, c, params, operators):
    """One Crank-Nicolson update of a single wave function.

    Solves ((i/tau) M - K/4 - W(c)/2) psi^{n+1} = ((i/tau) M + K/4 + W(c)/2) psi^n,
    the algebraic form of testing against the midpoint average.
    """
    if c.kind != "real":
        raise ValueError("wave coefficient field must be real")
    left, right = operators.wave_matrices(c)
    return Field(operators.space, linalg.solve_complex(left, right @ psi.values))


def _coefficients(z_plus_half, z_minus_half, phi, params):
    space = z_plus_half.space
    c_plus = params.g * z_plus_half.values + params.G * z_minus_half.values
    c_minus = params.g * z_minus_half.values + params.G * z_plus_half.values
    if phi is not None:
        c_plus = c_plus + params.q * phi.values
        c_minus = c_minus - params.q * phi.values
    return Field(space, c_plus), Field(space, c_minus)


def _advance_pair(state, z_plus_half, z_minus_half, phi, params, operators, executor=None):
    c_plus, c_minus = _coefficients(z_plus_half, z_minus_half, phi, params)
    if executor is None:
        psi_p = advance_wave(state.psi_plus, c_plus, params, operators)
        psi_m = advance_wave(state.psi_minus, c_minus, params, operators)
    else:
        fut_p = executor.submit(advance_wave, state.psi_plus, c_plus, params, operators)
        fut_m = executor.submit(advance_wave, state.psi_minus, c_minus, params, operators)
        psi_p, psi_m = fut_p.result(), fut_m.result()
    return psi_p, psi_m


def step(state, params, operators, executor=None):
    """One full step: densities, potential, then the two wave updates."""
    z_p, z_m = relax_density(state, operators)
    phi = solve_potential(z_p, z_m, params, operators) if params.q != 0 else None
    psi_p, psi_m = _advance_pair(state, z_p, z_m, phi, params, operators, executor)
    return SchemeState(
        n=state.n + 1, psi_plus=psi_p, psi_minus=psi_m, z_plus=z_p, z_minus=z_m, phi=phi
    )


def run(
    space,
    params,
    psi0_plus,
    psi0_minus,
    record_stride=1,
    init_method="interpolate",
    exact_psi_plus=None,
    exact_psi_minus=None,
    exact_phi=None,
    on_record=None,
    parallel=False,
):
    """Run N = T/tau steps and collect diagnostics records.

    Records are taken at step 0, every ``record_stride`` steps, and at the
    final step.  The record at level n pairs the incoming half-level
    densities/potential with the freshly computed ones, which is exactly the
    stencil of the conserved energy; the level-0 record therefore triggers
    one extra Poisson solve for the potential matching the initial
    densities.  Optional exact solutions add L2 error columns (psi at t_n,
    phi at the preceding half level).
    """
    if record_stride < 1:
        raise ValueError("record_stride must be >= 1")
    state = initialize(space, psi0_plus, psi0_minus, params, method=init_method)
    operators = build_operators(space, params)
    records = []
    executor = ThreadPoolExecutor(max_workers=2) if parallel else None

    def emit(n, state, z_p, z_m, phi_prev, phi_half):
        rec = diagnostics.make_record(
            n,
            state,
            z_p,
            z_m,
            phi_prev,
            phi_half,
            params,
            operators,
            exact_psi_plus=exact_psi_plus,
            exact_psi_minus=exact_psi_minus,
            exact_phi=exact_phi,
        )
        records.append(rec)
        if on_record is not None:
            on_record(rec)

    try:
        phi_prev = None
        if params.q != 0:
            phi_prev = solve_potential(state.z_plus, state.z_minus, params, operators)
        for n in range(params.num_steps):
            try:
                z_p, z_m = relax_density(state, operators)
                phi_half = (
                    solve_potential(z_p, z_m, params, operators) if params.q != 0 else None
                )
                if n % record_stride == 0:
                    emit(n, state, z_p, z_m, phi_prev, phi_half)
                psi_p, psi_m = _advance_pair(state, z_p, z_m, phi_half, params, operators, executor)
            except (linalg.SolverFailure, linalg.CompatibilityError) as exc:
                raise type(exc)(f"step {n}: {exc}") from exc
            state = SchemeState(
                n=n + 1, psi_plus=psi_p, psi_minus=psi_m, z_plus=z_p, z_minus=z_m, phi=phi_half
            )
            phi_prev = phi_half
        z_p, z_m = relax_density(state, operators)
        phi_half = solve_potential(z_p, z_m, params, operators) if params.q != 0 else None
        emit(params.num_steps, state, z_p, z_m, phi_prev, phi_half)
    finally:
        if executor is not None:
            executor.shutdown()
    return state, records
