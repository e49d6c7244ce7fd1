import numpy as np
import pytest
from oracles import dense_density_load, dense_load, dense_mass, dense_stiffness, dense_weighted

from gppfem.assembly import (
    assemble_density_load,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
    assemble_weighted_mass,
)
from gppfem.fem import Field, build_space, l2_project
from gppfem.mesh import build_interval_mesh, build_rect_mesh

SMALL_SPACES = [
    ("1dP1", lambda: build_space(build_interval_mesh(1.0, 4), 1)),
    ("1dP2", lambda: build_space(build_interval_mesh(2.0, 5), 2)),
    ("2dP1", lambda: build_space(build_rect_mesh(1.0, 1.5, 2, 2), 1)),
    ("2dP2", lambda: build_space(build_rect_mesh(2.0, 1.0, 2, 2), 2)),
]


@pytest.fixture(params=[s[1] for s in SMALL_SPACES], ids=[s[0] for s in SMALL_SPACES])
def small_space(request):
    return request.param()


def test_mass_rows_1d_p1():
    n, L = 8, 2.0
    hc = L / n
    M = assemble_mass(build_space(build_interval_mesh(L, n), 1)).toarray()
    for i in range(n):
        assert M[i, i] == pytest.approx(4 * hc / 6, rel=1e-14)
        assert M[i, (i - 1) % n] == pytest.approx(hc / 6, rel=1e-14)
        assert M[i, (i + 1) % n] == pytest.approx(hc / 6, rel=1e-14)
    assert np.allclose(M.sum(axis=1), hc, rtol=1e-14)


def test_stiffness_rows_1d_p1():
    n, L = 8, 2.0
    hc = L / n
    K = assemble_stiffness(build_space(build_interval_mesh(L, n), 1)).toarray()
    for i in range(n):
        assert K[i, i] == pytest.approx(2 / hc, rel=1e-14)
        assert K[i, (i - 1) % n] == pytest.approx(-1 / hc, rel=1e-14)
        assert K[i, (i + 1) % n] == pytest.approx(-1 / hc, rel=1e-14)


def test_stiffness_constant_kernel(small_space):
    K = assemble_stiffness(small_space)
    ones = np.ones(small_space.ndof)
    assert np.max(np.abs(K @ ones)) <= 1e-13 * K.diagonal().max()


def test_stiffness_psd(small_space):
    K = assemble_stiffness(small_space)
    rng = np.random.default_rng(0)
    for _ in range(100):
        v = rng.normal(size=small_space.ndof)
        assert v @ (K @ v) >= -1e-12 * (v @ v)


def test_mass_vs_dense_oracle(small_space):
    M = assemble_mass(small_space).toarray()
    assert np.max(np.abs(M - dense_mass(small_space))) <= 1e-13


def test_stiffness_vs_dense_oracle(small_space):
    K = assemble_stiffness(small_space).toarray()
    scale = np.abs(K).max()
    assert np.max(np.abs(K - dense_stiffness(small_space))) <= 1e-13 * max(1.0, scale)


def test_weighted_vs_dense_oracle(small_space):
    rng = np.random.default_rng(1)
    c = Field(small_space, rng.normal(size=small_space.ndof))
    W = assemble_weighted_mass(small_space, c).toarray()
    assert np.max(np.abs(W - dense_weighted(small_space, c.values))) <= 1e-13


def test_density_load_vs_dense_oracle(small_space):
    rng = np.random.default_rng(2)
    psi = Field(
        small_space,
        rng.normal(size=small_space.ndof) + 1j * rng.normal(size=small_space.ndof),
    )
    b = assemble_density_load(small_space, psi)
    assert np.max(np.abs(b - dense_density_load(small_space, psi.values))) <= 1e-13


def test_load_vs_dense_oracle():
    space = build_space(build_interval_mesh(1.0, 4), 1)
    f = lambda x: np.cos(2 * np.pi * x)
    b = assemble_load(space, f)
    npts = space.quad_error.num_points
    assert np.max(np.abs(b - dense_load(space, f, npts=npts))) <= 1e-12


def test_weighted_equals_mass_for_unit_coefficient(small_space):
    M = assemble_mass(small_space)
    ones = Field(small_space, np.ones(small_space.ndof))
    W = assemble_weighted_mass(small_space, ones)
    assert np.max(np.abs((W - M).toarray())) <= 1e-14
    fives = Field(small_space, 5.0 * np.ones(small_space.ndof))
    W5 = assemble_weighted_mass(small_space, fives)
    assert np.max(np.abs((W5 - 5.0 * M).toarray())) <= 1e-13


def test_weighted_linearity(small_space):
    rng = np.random.default_rng(3)
    c1 = rng.normal(size=small_space.ndof)
    c2 = rng.normal(size=small_space.ndof)
    a, b = 0.7, -1.3
    W = assemble_weighted_mass(small_space, Field(small_space, a * c1 + b * c2)).toarray()
    W1 = assemble_weighted_mass(small_space, Field(small_space, c1)).toarray()
    W2 = assemble_weighted_mass(small_space, Field(small_space, c2)).toarray()
    assert np.max(np.abs(W - (a * W1 + b * W2))) <= 1e-13 * max(1.0, np.abs(W).max())


def test_exact_symmetry(small_space):
    rng = np.random.default_rng(4)
    c = Field(small_space, rng.normal(size=small_space.ndof))
    for A in (
        assemble_mass(small_space),
        assemble_stiffness(small_space),
        assemble_weighted_mass(small_space, c),
    ):
        assert (A - A.T).nnz == 0 or np.max(np.abs((A - A.T).data)) == 0.0


def test_density_load_trivial_cases():
    space = build_space(build_interval_mesh(1.0, 4), 2)
    zero = Field(space, np.zeros(space.ndof, dtype=complex))
    assert np.all(assemble_density_load(space, zero) == 0.0)
    one = Field(space, np.ones(space.ndof, dtype=complex))
    b = assemble_density_load(space, one)
    assert np.max(np.abs(b - space.int_weights)) <= 1e-14


def test_density_load_example1_mass():
    # |psi|^2 integrates to U0^2 L / 2 = 80 l0 for the density-wave data
    l0 = np.sqrt(2 * np.pi)
    L = 8 * l0
    space = build_space(build_interval_mesh(L, 512), 2)
    psi = l2_project(space, lambda x: np.sqrt(20.0) * np.cos(2 * np.pi * x / l0), kind="complex")
    total = assemble_density_load(space, psi).sum()
    assert total == pytest.approx(80.0 * l0, rel=1e-8)


def test_load_trivial_cases():
    space = build_space(build_rect_mesh(1.0, 1.0, 3, 3), 1)
    assert np.all(assemble_load(space, lambda x, y: np.zeros_like(x)) == 0.0)
    b = assemble_load(space, lambda x, y: np.ones_like(x))
    assert np.max(np.abs(b - space.int_weights)) <= 1e-14


def test_space_mismatch_rejected():
    s1 = build_space(build_interval_mesh(1.0, 4), 1)
    s2 = build_space(build_interval_mesh(1.0, 4), 1)
    c = Field(s2, np.ones(4))
    with pytest.raises(ValueError):
        assemble_weighted_mass(s1, c)
    with pytest.raises(ValueError):
        assemble_density_load(s1, Field(s2, np.ones(4, dtype=complex)))


def test_weighted_rejects_complex_coefficient():
    space = build_space(build_interval_mesh(1.0, 4), 1)
    with pytest.raises(ValueError):
        assemble_weighted_mass(space, Field(space, np.ones(4, dtype=complex)))
