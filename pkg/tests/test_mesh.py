import numpy as np
import pytest

from gppfem.mesh import build_interval_mesh, build_rect_mesh, cell_measures


def test_interval_basic():
    mesh = build_interval_mesh(1.0, 4)
    assert mesh.num_cells == 4
    assert mesh.h == 0.25
    # 5 stored vertices, one identified -> 4 distinct classes
    assert mesh.vertices.shape == (5, 1)
    assert mesh.periodic_map == {4: 0}


def test_interval_example1_coarse():
    l0 = np.sqrt(2.0 * np.pi)
    mesh = build_interval_mesh(8.0 * l0, 100)
    assert mesh.h == pytest.approx(8.0 * l0 / 100, rel=1e-14)


def test_interval_measure_additivity():
    mesh = build_interval_mesh(2.0, 2)
    assert mesh.num_cells == 2
    assert cell_measures(mesh).sum() == pytest.approx(2.0, rel=1e-12)


@pytest.mark.parametrize("L,n", [(0.0, 4), (-1.0, 4), (1.0, 1), (1.0, 0)])
def test_interval_invalid(L, n):
    with pytest.raises(ValueError):
        build_interval_mesh(L, n)


def test_rect_example2_coarse():
    mesh = build_rect_mesh(5.0, 5.0, 20, 20)
    assert mesh.num_cells == 800


def test_rect_tiling():
    mesh = build_rect_mesh(1.0, 1.0, 2, 2)
    assert mesh.num_cells == 8
    assert cell_measures(mesh).sum() == pytest.approx(1.0, rel=1e-12)


def test_rect_h_is_diagonal():
    mesh = build_rect_mesh(2.0, 1.0, 4, 2)
    assert mesh.h == pytest.approx(np.hypot(0.5, 0.5), rel=1e-14)


@pytest.mark.parametrize("args", [(0, 1, 4, 4), (1, 1, 1, 4), (1, 1, 4, 1), (-2, 1, 4, 4)])
def test_rect_invalid(args):
    with pytest.raises(ValueError):
        build_rect_mesh(*args)


def test_rect_triangles_positive_area():
    mesh = build_rect_mesh(3.0, 2.0, 5, 4)
    pts = mesh.cell_vertices()
    e1 = pts[:, 1] - pts[:, 0]
    e2 = pts[:, 2] - pts[:, 0]
    cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    assert np.all(cross > 0)


def test_rect_h_exact_max_diameter():
    mesh = build_rect_mesh(3.0, 2.0, 5, 4)
    pts = mesh.cell_vertices()
    diam = 0.0
    for a in range(3):
        for b in range(a + 1, 3):
            diam = max(diam, np.linalg.norm(pts[:, a] - pts[:, b], axis=1).max())
    assert mesh.h == diam


@pytest.mark.parametrize(
    "mesh",
    [build_interval_mesh(1.0, 6), build_rect_mesh(1.0, 2.0, 3, 4)],
    ids=["interval", "rect"],
)
def test_periodic_map_idempotent(mesh):
    masters = set(range(len(mesh.vertices))) - set(mesh.periodic_map)
    for slave, master in mesh.periodic_map.items():
        assert master in masters
        assert slave != master


def test_measure_additivity_rect_general():
    mesh = build_rect_mesh(2.5, 1.5, 7, 3)
    assert cell_measures(mesh).sum() == pytest.approx(2.5 * 1.5, rel=1e-12)
