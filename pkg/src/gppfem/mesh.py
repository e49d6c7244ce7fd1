"""Uniform periodic meshes of an interval or a rectangle.

Vertices are stored including the duplicated boundary layer (x = Lx and
y = Ly), so cell geometry is always read from unwrapped coordinates.  The
identification of opposite boundaries lives in ``periodic_map``; degree-of-
freedom wrap-around is handled later by the function spaces.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Mesh:
    """Uniform simplicial partition of [0,Lx] or [0,Lx]x[0,Ly].

    Attributes
    ----------
    dim : int
        Spatial dimension, 1 or 2.
    extents : tuple of float
        Domain edge lengths (Lx,) or (Lx, Ly).
    divisions : tuple of int
        Number of grid cells per direction.
    vertices : ndarray, shape (nv, dim)
        Vertex coordinates, including the duplicated periodic boundary.
    cells : ndarray, shape (ncells, dim+1)
        Vertex indices of each cell (intervals or triangles).
    periodic_map : dict[int, int]
        Boundary (slave) vertex index -> master vertex index.
    h : float
        Maximum cell diameter, computed from the stored vertices.
    """

    dim: int
    extents: tuple
    divisions: tuple
    vertices: np.ndarray = field(repr=False)
    cells: np.ndarray = field(repr=False)
    periodic_map: dict = field(repr=False)
    h: float

    @property
    def num_cells(self):
        return self.cells.shape[0]

    def cell_vertices(self):
        """Coordinates of each cell's vertices, shape (ncells, dim+1, dim)."""
        return self.vertices[self.cells]


def build_interval_mesh(L, n):
    """Uniform periodic mesh of [0, L] with n cells.

    The vertex at x = L is identified with x = 0.
    """
    if not L > 0:
        raise ValueError(f"interval length must be positive, got {L}")
    if n < 2:
        raise ValueError(f"need at least 2 cells, got {n}")
    x = np.linspace(0.0, float(L), n + 1)
    vertices = x[:, None]
    cells = np.stack([np.arange(n), np.arange(1, n + 1)], axis=1)
    h = float(np.max(np.diff(x)))
    return Mesh(
        dim=1,
        extents=(float(L),),
        divisions=(int(n),),
        vertices=vertices,
        cells=cells,
        periodic_map={n: 0},
        h=h,
    )


def build_rect_mesh(Lx, Ly, nx, ny):
    """Uniform periodic triangulation of [0,Lx]x[0,Ly] with 2*nx*ny triangles.

    Every grid cell is split along its lower-left to upper-right diagonal,
    giving counterclockwise triangles (a,b,c) and (a,c,d).  Both pairs of
    opposite boundaries are identified.
    """
    if not (Lx > 0 and Ly > 0):
        raise ValueError(f"rectangle extents must be positive, got ({Lx}, {Ly})")
    if nx < 2 or ny < 2:
        raise ValueError(f"need at least 2 cells per direction, got ({nx}, {ny})")
    nx, ny = int(nx), int(ny)
    x = np.linspace(0.0, float(Lx), nx + 1)
    y = np.linspace(0.0, float(Ly), ny + 1)
    xx, yy = np.meshgrid(x, y, indexing="xy")  # row iy, column ix
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    def vid(ix, iy):
        return iy * (nx + 1) + ix

    cx, cy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    cx, cy = cx.ravel(), cy.ravel()
    a = vid(cx, cy)
    b = vid(cx + 1, cy)
    c = vid(cx + 1, cy + 1)
    d = vid(cx, cy + 1)
    lower = np.stack([a, b, c], axis=1)
    upper = np.stack([a, c, d], axis=1)
    cells = np.concatenate([lower, upper], axis=0)

    periodic_map = {}
    for iy in range(ny + 1):
        periodic_map[vid(nx, iy)] = vid(0, iy % ny)
    for ix in range(nx + 1):
        periodic_map[vid(ix, ny)] = vid(ix % nx, 0)
    periodic_map[vid(nx, ny)] = vid(0, 0)

    pts = vertices[cells]
    edges = np.stack(
        [pts[:, 1] - pts[:, 0], pts[:, 2] - pts[:, 1], pts[:, 0] - pts[:, 2]], axis=1
    )
    h = float(np.max(np.linalg.norm(edges, axis=2)))
    return Mesh(
        dim=2,
        extents=(float(Lx), float(Ly)),
        divisions=(nx, ny),
        vertices=vertices,
        cells=cells,
        periodic_map=periodic_map,
        h=h,
    )


def cell_measures(mesh):
    """Measure (length or area) of every cell."""
    pts = mesh.cell_vertices()
    if mesh.dim == 1:
        return np.abs(pts[:, 1, 0] - pts[:, 0, 0])
    e1 = pts[:, 1] - pts[:, 0]
    e2 = pts[:, 2] - pts[:, 0]
    return 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
