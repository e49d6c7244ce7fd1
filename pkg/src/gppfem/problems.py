"""Built-in experiment catalog with exact solutions.

Three benchmark problems: a 1D density wave for the fully coupled system, a
2D plane-wave pair for the q = 0 reduction, and a 2D density wave with
potential.  Every entry carries analytic spatial derivatives so the catalog
can be validated by substituting the exact solution into the strong
equations (residual_check), guarding against transcription slips in the
derived constants.

Custom problems are plain ProblemSpec instances; anything with the same
callable fields runs through the scheme and harness unchanged.
"""

from dataclasses import dataclass, field

import numpy as np

CATALOG_NAMES = ("density_wave_1d", "gpe_plane_wave_2d", "density_wave_2d")


@dataclass(frozen=True)
class ProblemSpec:
    """One experiment: domain, parameters, initial data, optional exact solution.

    Pointwise callables take coordinate arrays (x[, y]) and, for the exact
    solutions, a trailing time argument.  lap_* are analytic Laplacians used
    by residual_check.
    """

    name: str
    dim: int
    extents: tuple
    g: float
    G: float
    q: float
    psi0_plus: callable
    psi0_minus: callable
    exact_psi_plus: callable = None
    exact_psi_minus: callable = None
    exact_phi: callable = None
    lap_psi_plus: callable = None
    lap_psi_minus: callable = None
    lap_phi: callable = None
    constants: dict = field(default_factory=dict)

    @property
    def has_exact(self):
        return self.exact_psi_plus is not None


def _density_wave_1d():
    q, G, g = 1.0, 2.0, 1.0
    l0 = np.sqrt(2.0 * np.pi * (G - g)) / q
    L = 8.0 * l0
    U0 = 2.0 * np.sqrt(5.0)
    Phi0 = (G - g) * U0**2 / (2.0 * q)
    mu = 2.0 * np.pi**2 / l0**2 + 0.5 * (G + g) * U0**2
    k = 2.0 * np.pi / l0

    def psi_plus(x, t):
        return U0 * np.exp(-1j * mu * t) * np.cos(k * x)

    def psi_minus(x, t):
        return U0 * np.exp(-1j * mu * t) * np.sin(k * x)

    def phi(x, t):
        return Phi0 * np.cos(2.0 * k * x) + 0.0 * t

    return ProblemSpec(
        name="density_wave_1d",
        dim=1,
        extents=(L,),
        g=g,
        G=G,
        q=q,
        psi0_plus=lambda x: psi_plus(x, 0.0),
        psi0_minus=lambda x: psi_minus(x, 0.0),
        exact_psi_plus=psi_plus,
        exact_psi_minus=psi_minus,
        exact_phi=phi,
        lap_psi_plus=lambda x, t: -(k**2) * psi_plus(x, t),
        lap_psi_minus=lambda x, t: -(k**2) * psi_minus(x, t),
        lap_phi=lambda x, t: -((2.0 * k) ** 2) * phi(x, t),
        constants={"l0": l0, "L": L, "U0": U0, "Phi0": Phi0, "mu": mu},
    )


def _gpe_plane_wave_2d():
    g, G, q = 1.0, 2.0, 0.0
    L = 5.0
    amp_plus = 4.5
    amp_minus = 4.5
    wavenum = 4.0 * np.pi / 5.0
    phase_plus = 0.0
    phase_minus = np.pi / 5.0
    freq_plus = -(wavenum**2 + g * amp_plus**2 + G * amp_minus**2)
    freq_minus = -(wavenum**2 + G * amp_plus**2 + g * amp_minus**2)

    def make_wave(amp, freq, phase):
        def wave(x, y, t):
            return amp * np.exp(1j * (freq * t + wavenum * (x + y) + phase))

        return wave

    psi_plus = make_wave(amp_plus, freq_plus, phase_plus)
    psi_minus = make_wave(amp_minus, freq_minus, phase_minus)
    return ProblemSpec(
        name="gpe_plane_wave_2d",
        dim=2,
        extents=(L, L),
        g=g,
        G=G,
        q=q,
        psi0_plus=lambda x, y: psi_plus(x, y, 0.0),
        psi0_minus=lambda x, y: psi_minus(x, y, 0.0),
        exact_psi_plus=psi_plus,
        exact_psi_minus=psi_minus,
        lap_psi_plus=lambda x, y, t: -2.0 * wavenum**2 * psi_plus(x, y, t),
        lap_psi_minus=lambda x, y, t: -2.0 * wavenum**2 * psi_minus(x, y, t),
        constants={
            "amp_plus": amp_plus,
            "amp_minus": amp_minus,
            "wavenum": wavenum,
            "freq_plus": freq_plus,
            "freq_minus": freq_minus,
            "phase_plus": phase_plus,
            "phase_minus": phase_minus,
        },
    )


def _density_wave_2d():
    q, G, g = 1.0, 2.0, 1.0
    l0 = np.sqrt(2.0 * np.pi * (G - g)) / q
    U0x = U0y = 2.0 * np.sqrt(5.0)
    Phi0x = Phi0y = (G - g) * U0x**2 / (2.0 * q)
    mu = 2.0 * np.pi**2 / l0**2 + 0.5 * (G + g) * (U0x**2 + U0y**2)
    k = 2.0 * np.pi / l0

    def psi_plus(x, y, t):
        return np.exp(-1j * mu * t) * (U0x * np.cos(k * x) + 1j * U0y * np.cos(k * y))

    def psi_minus(x, y, t):
        return np.exp(-1j * mu * t) * (U0x * np.sin(k * x) + 1j * U0y * np.sin(k * y))

    def phi(x, y, t):
        return Phi0x * np.cos(2.0 * k * x) + Phi0y * np.cos(2.0 * k * y) + 0.0 * t

    def lap_psi_plus(x, y, t):
        return -(k**2) * psi_plus(x, y, t)

    def lap_psi_minus(x, y, t):
        return -(k**2) * psi_minus(x, y, t)

    return ProblemSpec(
        name="density_wave_2d",
        dim=2,
        extents=(l0, l0),
        g=g,
        G=G,
        q=q,
        psi0_plus=lambda x, y: psi_plus(x, y, 0.0),
        psi0_minus=lambda x, y: psi_minus(x, y, 0.0),
        exact_psi_plus=psi_plus,
        exact_psi_minus=psi_minus,
        exact_phi=phi,
        lap_psi_plus=lap_psi_plus,
        lap_psi_minus=lap_psi_minus,
        lap_phi=lambda x, y, t: -((2.0 * k) ** 2) * phi(x, y, t),
        constants={"l0": l0, "U0x": U0x, "U0y": U0y, "Phi0x": Phi0x, "Phi0y": Phi0y, "mu": mu},
    )


_BUILDERS = {
    "density_wave_1d": _density_wave_1d,
    "gpe_plane_wave_2d": _gpe_plane_wave_2d,
    "density_wave_2d": _density_wave_2d,
}


def catalog_get(name):
    """Fetch a built-in problem by name."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}, expected one of {CATALOG_NAMES}") from None
    return builder()


def _time_derivative(f, args, t, delta):
    # centered difference with one Richardson pass, O(delta^4)
    def d(dd):
        return (f(*args, t + dd) - f(*args, t - dd)) / (2.0 * dd)

    return (4.0 * d(delta / 2.0) - d(delta)) / 3.0


def residual_check(spec, num_samples=20, seed=0, delta=2e-4):
    """Max pointwise residual of the exact solution in the strong equations.

    Spatial derivatives are analytic; time derivatives use a centered
    difference with Richardson extrapolation, so the attainable floor is set
    by the finite-difference truncation (~1e-7 for the catalog problems).
    """
    if not spec.has_exact:
        raise ValueError(f"problem {spec.name!r} has no exact solution")
    rng = np.random.default_rng(seed)
    coords = [rng.uniform(0.0, ext, size=num_samples) for ext in spec.extents]
    times = rng.uniform(0.0, 1.0, size=num_samples)
    worst = 0.0
    for i in range(num_samples):
        args = [c[i] for c in coords]
        t = times[i]
        pp = spec.exact_psi_plus(*args, t)
        pm = spec.exact_psi_minus(*args, t)
        dens_p, dens_m = abs(pp) ** 2, abs(pm) ** 2
        phi = spec.exact_phi(*args, t) if spec.exact_phi is not None else 0.0
        dt_p = _time_derivative(spec.exact_psi_plus, args, t, delta)
        dt_m = _time_derivative(spec.exact_psi_minus, args, t, delta)
        r_plus = 1j * dt_p - (
            -0.5 * spec.lap_psi_plus(*args, t)
            + (spec.g * dens_p + spec.G * dens_m + spec.q * phi) * pp
        )
        r_minus = 1j * dt_m - (
            -0.5 * spec.lap_psi_minus(*args, t)
            + (spec.g * dens_m + spec.G * dens_p - spec.q * phi) * pm
        )
        worst = max(worst, abs(r_plus), abs(r_minus))
        if spec.q != 0:
            r_phi = spec.lap_phi(*args, t) + 4.0 * np.pi * spec.q * (dens_p - dens_m)
            worst = max(worst, abs(r_phi))
    return worst
