import dataclasses

import numpy as np
import pytest

from gppfem.problems import CATALOG_NAMES, catalog_get, residual_check


def test_unknown_name():
    with pytest.raises(ValueError):
        catalog_get("soliton_zoo")


def test_example1_constants():
    spec = catalog_get("density_wave_1d")
    c = spec.constants
    assert c["l0"] == pytest.approx(np.sqrt(2 * np.pi * (spec.G - spec.g)) / spec.q, rel=1e-13)
    assert c["mu"] == pytest.approx(np.pi + 30.0, rel=1e-13)
    assert c["Phi0"] == pytest.approx(10.0, rel=1e-13)
    assert c["U0"] == pytest.approx(2 * np.sqrt(5.0), rel=1e-15)
    # the two equivalent amplitude formulas for the potential
    assert c["Phi0"] == pytest.approx(
        spec.q * c["U0"] ** 2 * c["l0"] ** 2 / (4 * np.pi), rel=1e-13
    )


def test_example2_constants():
    spec = catalog_get("gpe_plane_wave_2d")
    c = spec.constants
    assert spec.q == 0.0
    assert c["wavenum"] == pytest.approx(4 * np.pi / 5, rel=1e-15)
    assert c["freq_plus"] == pytest.approx(-((4 * np.pi / 5) ** 2 + 60.75), rel=1e-13)
    assert c["freq_plus"] == c["freq_minus"]  # equal amplitudes make both frequencies match
    assert c["phase_minus"] == pytest.approx(np.pi / 5, rel=1e-15)


def test_example3_constants():
    spec = catalog_get("density_wave_2d")
    c = spec.constants
    assert c["Phi0x"] == pytest.approx((spec.G - spec.g) * 20.0 / (2 * spec.q), rel=1e-14)
    assert c["Phi0x"] == pytest.approx(10.0, rel=1e-13)
    assert c["mu"] == pytest.approx(np.pi + 60.0, rel=1e-13)
    assert spec.extents == (c["l0"], c["l0"])


@pytest.mark.parametrize("name", CATALOG_NAMES)
def test_exact_solutions_satisfy_equations(name):
    assert residual_check(catalog_get(name)) <= 1e-6


def test_residual_negative_control():
    spec = catalog_get("density_wave_1d")
    mu_bad = spec.constants["mu"] * 1.01
    U0, l0 = spec.constants["U0"], spec.constants["l0"]
    k = 2 * np.pi / l0
    bad_plus = lambda x, t: U0 * np.exp(-1j * mu_bad * t) * np.cos(k * x)
    bad_minus = lambda x, t: U0 * np.exp(-1j * mu_bad * t) * np.sin(k * x)
    corrupted = dataclasses.replace(
        spec,
        exact_psi_plus=bad_plus,
        exact_psi_minus=bad_minus,
        lap_psi_plus=lambda x, t: -(k**2) * bad_plus(x, t),
        lap_psi_minus=lambda x, t: -(k**2) * bad_minus(x, t),
    )
    assert residual_check(corrupted) > 1e-2


def test_residual_requires_exact_solution():
    spec = catalog_get("gpe_plane_wave_2d")
    stripped = dataclasses.replace(spec, exact_psi_plus=None)
    with pytest.raises(ValueError):
        residual_check(stripped)


@pytest.mark.parametrize("name", CATALOG_NAMES)
def test_initial_masses_balance(name):
    # analytic mass compatibility of the catalog's initial data
    spec = catalog_get(name)
    rng = np.random.default_rng(0)
    # Monte-Carlo integral difference should be driven by sampling error only,
    # so use a matched antithetic sample and a loose bound
    pts = [rng.uniform(0, ext, size=200000) for ext in spec.extents]
    dp = np.mean(np.abs(spec.psi0_plus(*pts)) ** 2)
    dm = np.mean(np.abs(spec.psi0_minus(*pts)) ** 2)
    assert dp == pytest.approx(dm, rel=2e-2)
