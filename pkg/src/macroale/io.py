"""File output: legacy VTK, Wavefront OBJ, Matrix Market, sparsity graymaps."""
import os

import numpy as np
import scipy.io
import scipy.sparse as sp

from .cutting import OCTA_SPLIT, HybridMesh, SurfaceMesh
from .mesh import MacroMesh

__all__ = [
    "export_tets",
    "write_vtk",
    "write_macro_vtk",
    "write_surface_vtk",
    "write_surface_obj",
    "write_matrix_market",
    "write_sparsity_pgm",
]

VTK_TETRA = 10
VTK_TRIANGLE = 5


def export_tets(hm: HybridMesh, u=None):
    """Flatten the hybrid mesh to pure tets for viewers.

    Octahedra become their eight split tets around an appended centre
    point whose field value is the mean of the six octahedron nodes.

    Returns
    -------
    points, tets, point_values, cell_coeff
    """
    n = hm.n_nodes
    n_oct = len(hm.octas)
    centers = hm.node_coords[hm.octas].mean(axis=1) if n_oct else np.zeros((0, 3))
    points = np.vstack([hm.node_coords, centers]) if n else np.zeros((0, 3))
    conn7 = np.hstack([hm.octas, (n + np.arange(n_oct))[:, None]]) if n_oct else np.zeros((0, 7), int)
    split = conn7[:, OCTA_SPLIT].reshape(-1, 4)
    tets = np.vstack([hm.sub_tets.reshape(-1, 4), split]).astype(np.int64)
    coeff = np.concatenate(
        [
            np.asarray(hm.tet_coeff if hm.tet_coeff is not None else np.ones(len(hm.sub_tets))),
            np.repeat(hm.octa_coeff if hm.octa_coeff is not None else np.ones(n_oct), 8),
        ]
    )
    values = None
    if u is not None:
        uu = np.asarray(u, dtype=float).reshape(n, -1) if n else np.zeros((0, 3))
        cu = uu[hm.octas].mean(axis=1) if n_oct else np.zeros((0, uu.shape[1]))
        values = np.vstack([uu, cu])
    return points, tets, values, coeff


def _fmt_rows(a, fmt):
    return "".join(fmt % tuple(row) + "\n" for row in a)


def _write_unstructured(path, title, points, cells, cell_type, point_vectors=None, cell_scalars=None):
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    cells = np.asarray(cells, dtype=np.int64)
    k = cells.shape[1] if cells.ndim == 2 else 0
    m = len(cells)
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(title + "\n")
        fh.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {len(points)} double\n")
        fh.write(_fmt_rows(points, "%.17g %.17g %.17g"))
        fh.write(f"CELLS {m} {m * (k + 1)}\n")
        if m:
            fh.write(_fmt_rows(np.hstack([np.full((m, 1), k), cells]), " ".join(["%d"] * (k + 1))))
        fh.write(f"CELL_TYPES {m}\n")
        fh.write("".join(f"{cell_type}\n" for _ in range(m)))
        if point_vectors is not None and len(points):
            fh.write(f"POINT_DATA {len(points)}\n")
            for name, vec in point_vectors.items():
                fh.write(f"VECTORS {name} double\n")
                fh.write(_fmt_rows(np.asarray(vec).reshape(-1, 3), "%.17g %.17g %.17g"))
        if cell_scalars is not None and m:
            fh.write(f"CELL_DATA {m}\n")
            for name, val in cell_scalars.items():
                fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                fh.write("".join("%.17g\n" % v for v in val))


def write_vtk(hm: HybridMesh, u, path) -> None:
    """Write the hybrid mesh and the vector field ``u`` as a legacy VTK file."""
    points, tets, values, coeff = export_tets(hm, u)
    vectors = None if values is None else {"u": values}
    _write_unstructured(path, "hybrid mesh solution", points, tets, VTK_TETRA, vectors, {"coefficient": coeff})


def write_macro_vtk(mesh: MacroMesh, path) -> None:
    _write_unstructured(path, "macro mesh", mesh.vertices, mesh.macro_tets, VTK_TETRA)


def write_surface_vtk(surface: SurfaceMesh, path) -> None:
    pts, tri = surface.points, surface.triangles
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\nreconstructed interface\nASCII\nDATASET POLYDATA\n")
        fh.write(f"POINTS {len(pts)} double\n")
        fh.write(_fmt_rows(pts, "%.17g %.17g %.17g"))
        fh.write(f"POLYGONS {len(tri)} {4 * len(tri)}\n")
        fh.write(_fmt_rows(np.hstack([np.full((len(tri), 1), 3), tri]), "%d %d %d %d"))


def write_surface_obj(surface: SurfaceMesh, path) -> None:
    with open(path, "w") as fh:
        fh.write(_fmt_rows(surface.points, "v %.17g %.17g %.17g"))
        fh.write(_fmt_rows(surface.triangles + 1, "f %d %d %d"))


def write_matrix_market(K, path) -> None:
    scipy.io.mmwrite(os.fspath(path), sp.coo_matrix(K))


def write_sparsity_pgm(K, path, max_pixels: int = 512) -> None:
    """Binary PGM of the sparsity pattern (black = nonzero), binned to ``max_pixels``."""
    A = sp.coo_matrix(K)
    n = max(A.shape)
    size = max(1, min(n, max_pixels))
    img = np.full((size, size), 255, dtype=np.uint8)
    if A.nnz:
        r = (A.row * size) // max(n, 1)
        c = (A.col * size) // max(n, 1)
        img[r, c] = 0
    with open(path, "wb") as fh:
        fh.write(f"P5\n{size} {size}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
