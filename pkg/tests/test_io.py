import numpy as np
import pytest
import scipy.io
import scipy.sparse as sp

from macroale.cutting import HybridMesh, SurfaceMesh, compute_cut, reconstruct_surface, subdivide, uncut_state
from macroale.io import (
    export_tets,
    write_macro_vtk,
    write_matrix_market,
    write_sparsity_pgm,
    write_surface_obj,
    write_surface_vtk,
    write_vtk,
)
from macroale.mesh import build_macro_mesh, signed_volumes


def read_vtk_counts(path):
    lines = open(path).read().splitlines()
    pts = next(int(l.split()[1]) for l in lines if l.startswith("POINTS"))
    cells = next(int(l.split()[1]) for l in lines if l.startswith("CELLS"))
    return lines, pts, cells


def test_empty_mesh(tmp_path):
    hm = HybridMesh(np.zeros((0, 3)), np.zeros((0, 4, 4), int), np.zeros((0, 6), int), np.zeros(0), np.zeros(0))
    path = tmp_path / "empty.vtk"
    write_vtk(hm, np.zeros(0), path)
    lines, pts, cells = read_vtk_counts(path)
    assert lines[0] == "# vtk DataFile Version 3.0"
    assert pts == 0 and cells == 0


def test_unit_mesh_counts(tmp_path):
    mesh = build_macro_mesh(1)
    hm = subdivide(mesh, uncut_state(mesh))
    u = np.arange(3 * hm.n_nodes, dtype=float)
    path = tmp_path / "u.vtk"
    write_vtk(hm, u, path)
    lines, pts, cells = read_vtk_counts(path)
    assert cells == 72
    assert pts == mesh.n_vertices + mesh.n_edges + mesh.n_tets == 33
    assert "VECTORS u double" in lines
    assert lines.count("10") == 72


def test_export_volume_and_center_values(mesh4, moving_sphere):
    for t in (0.0, 0.25, 0.5):
        cut = compute_cut(mesh4, moving_sphere, t, double_crossing="midpoint")
        hm = subdivide(mesh4, cut)
        u = np.random.default_rng(1).standard_normal(3 * hm.n_nodes)
        points, tets, values, coeff = export_tets(hm, u)
        vol = signed_volumes(*(points[tets[:, k]] for k in range(4)))
        assert (vol > 0).all()
        assert vol.sum() == pytest.approx(1.0, abs=1e-10)
        centers = values[hm.n_nodes :]
        np.testing.assert_allclose(centers, u.reshape(-1, 3)[hm.octas].mean(axis=1))
        assert len(coeff) == len(tets)


def test_surface_writers(tmp_path, mesh8, moving_sphere):
    surf = reconstruct_surface(mesh8, compute_cut(mesh8, moving_sphere, 0.0, double_crossing="midpoint"))
    write_surface_vtk(surf, tmp_path / "s.vtk")
    write_surface_obj(surf, tmp_path / "s.obj")
    text = (tmp_path / "s.vtk").read_text()
    assert "DATASET POLYDATA" in text and f"POLYGONS {len(surf.triangles)}" in text
    obj = (tmp_path / "s.obj").read_text().splitlines()
    assert sum(l.startswith("v ") for l in obj) == len(surf.points)
    assert sum(l.startswith("f ") for l in obj) == len(surf.triangles)


def test_matrix_outputs(tmp_path):
    K = sp.random(40, 40, density=0.1, random_state=3, format="csr") + sp.identity(40)
    write_matrix_market(K, tmp_path / "k.mtx")
    back = scipy.io.mmread(tmp_path / "k.mtx")
    assert abs(back - K).max() == 0
    write_sparsity_pgm(K, tmp_path / "k.pgm")
    data = (tmp_path / "k.pgm").read_bytes()
    assert data.startswith(b"P5\n40 40\n255\n")
    assert len(data) == len(b"P5\n40 40\n255\n") + 1600


def test_macro_vtk(tmp_path, mesh2):
    write_macro_vtk(mesh2, tmp_path / "m.vtk")
    _, pts, cells = read_vtk_counts(tmp_path / "m.vtk")
    assert (pts, cells) == (27, 48)
