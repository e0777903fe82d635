import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from macroale.cutting import (
    EPS_CUT,
    HybridMesh,
    LevelSet,
    compute_cut,
    eval_level_set,
    local_nodes,
    place_nodes,
    reconstruct_surface,
    subdivide,
    uncut_state,
    SUB_TETS,
    OCTA,
)
from macroale.errors import ResolutionError
from macroale.mesh import MacroMesh, build_macro_mesh


def single_edge_mesh(p, q):
    """A one-tet mesh whose first edge runs from ``p`` to ``q``."""
    p, q = np.asarray(p, float), np.asarray(q, float)
    d = q - p
    e1 = np.cross(d, [0, 0, 1.0]) if abs(d[2]) < 0.9 * np.linalg.norm(d) else np.cross(d, [1.0, 0, 0])
    e1 *= np.linalg.norm(d) / np.linalg.norm(e1) * 10
    e2 = np.cross(d, e1)
    e2 *= np.linalg.norm(d) / np.linalg.norm(e2) * 10
    verts = np.array([p, q, p + e1, p + e2])
    tet = np.array([[0, 1, 2, 3]])
    pairs = np.array([(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
    vol = np.dot(verts[1] - verts[0], np.cross(verts[2] - verts[0], verts[3] - verts[0]))
    if vol < 0:
        verts[[2, 3]] = verts[[3, 2]]
    return MacroMesh(1, verts, tet, pairs, np.arange(6)[None])


def test_level_set_values():
    ls = LevelSet("moving_sphere", (0.125, 0.125, 0.125), 0.12, (1, 1, 1))
    assert eval_level_set(ls, (0.125, 0.125, 0.125), 0.0) == pytest.approx(-0.12)
    g = LevelSet("growing_sphere", (0.5, 0.5, 0.5), 0.08, 1.0)
    assert eval_level_set(g, (0.58, 0.5, 0.5), 0.0) == pytest.approx(0.0, abs=1e-15)
    # radius 0.08 + 0.05 at t = 0.05
    assert eval_level_set(g, (0.5, 0.5, 0.63), 0.05) == pytest.approx(0.0, abs=1e-15)
    # moving: the centre travels with the velocity
    assert eval_level_set(ls, (0.225, 0.225, 0.225), 0.1) == pytest.approx(-0.12)


def test_level_set_rejects_bad_input():
    with pytest.raises(ValueError):
        LevelSet("moving_sphere", (0, 0, 0), 0.0, (1, 1, 1))
    ls = LevelSet("growing_sphere", (0, 0, 0), 1.0, 1.0)
    with pytest.raises(ValueError):
        eval_level_set(ls, (0, 0, 0), -1.0)


def test_uncut_edge():
    mesh = single_edge_mesh((0, 0, 0), (0.25, 0, 0))
    ls = LevelSet("growing_sphere", (5.0, 5.0, 5.0), 0.1, 0.0)
    cut = compute_cut(mesh, ls, 0.0)
    assert not cut.edge_is_cut.any()
    assert (cut.edge_param == 0.5).all()


def test_double_crossing_is_a_resolution_error():
    # roots at s = 0.02 and s = 0.98
    mesh = single_edge_mesh((0, 0, 0), (0.25, 0, 0))
    ls = LevelSet("growing_sphere", (0.125, 0, 0), 0.12, 0.0)
    with pytest.raises(ResolutionError):
        compute_cut(mesh, ls, 0.0)
    cut = compute_cut(mesh, ls, 0.0, double_crossing="midpoint")
    assert cut.n_double_crossed >= 1
    assert cut.edge_param[0] == 0.5


def test_single_crossing_root():
    mesh = single_edge_mesh((0.5, 0.5, 0.5), (0.75, 0.5, 0.5))
    ls = LevelSet("growing_sphere", (0.5, 0.5, 0.5), 0.08, 1.0)
    cut = compute_cut(mesh, ls, 0.0)
    assert cut.edge_is_cut[0]
    assert cut.edge_param[0] == pytest.approx(0.32, abs=1e-11)


def test_clamping(mesh4):
    # vertex (0.25,0.25,0.25) inside; axis edges cut at s = 0.96 -> clamped
    ls = LevelSet("growing_sphere", (0.25, 0.25, 0.25), 0.24, 0.0)
    cut = compute_cut(mesh4, ls, 0.0, double_crossing="midpoint")
    p = cut.edge_param[cut.edge_is_cut]
    assert p.min() >= EPS_CUT and p.max() <= 1 - EPS_CUT
    assert np.isclose(cut.edge_root[cut.edge_is_cut], 0.96).any() or np.isclose(
        cut.edge_root[cut.edge_is_cut], 0.04
    ).any()
    assert (cut.edge_param[~cut.edge_is_cut] == 0.5).all()
    assert (cut.node_side[mesh4.n_vertices :][cut.edge_is_cut] == 0).all()


def test_tie_rule_vertex_on_interface(mesh4):
    ls = LevelSet("growing_sphere", (0.5, 0.5, 0.5), 0.25, 0.0)
    cut = compute_cut(mesh4, ls, 0.0, double_crossing="midpoint")
    on = np.isclose(np.linalg.norm(mesh4.vertices - 0.5, axis=1), 0.25)
    assert on.any()
    assert (cut.vertex_side[on] == -1).all()


def test_uncut_macro_tet_is_red_refinement(mesh2):
    hm = subdivide(mesh2, uncut_state(mesh2))
    macro = mesh2.tet_volumes()
    tv = hm.tet_volumes().reshape(-1, 4)
    np.testing.assert_allclose(tv, np.repeat(macro[:, None] / 8, 4, axis=1), rtol=1e-12)
    np.testing.assert_allclose(hm.octa_volumes(), macro / 2, rtol=1e-12)


def test_n32_subdivision_counts():
    mesh = build_macro_mesh(32)
    hm = subdivide(mesh, uncut_state(mesh))
    assert hm.sub_tets.shape == (786432, 4)
    assert hm.octas.shape == (196608, 6)
    assert hm.n_nodes == 274625


def test_one_cut_edge_tiling():
    mesh = build_macro_mesh(1)
    s = np.full(mesh.n_edges, 0.5)
    s[0] = 0.3
    coords = place_nodes(mesh, s)
    loc = local_nodes(mesh)
    hm = HybridMesh(coords, loc[:, SUB_TETS].reshape(-1, 4), loc[:, OCTA], None, None)
    total = hm.tet_volumes().reshape(-1, 4).sum(axis=1) + hm.octa_volumes()
    np.testing.assert_allclose(total, mesh.tet_volumes(), rtol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(EPS_CUT, 1 - EPS_CUT), min_size=98, max_size=98))
def test_tiling_any_placement(params):
    mesh = build_macro_mesh(2)
    coords = place_nodes(mesh, np.array(params))
    loc = local_nodes(mesh)
    hm = HybridMesh(coords, loc[:, SUB_TETS].reshape(-1, 4), loc[:, OCTA], None, None)
    assert (hm.tet_volumes() > 0).all()
    assert (hm.octa_split_volumes() > 0).all()
    total = hm.tet_volumes().reshape(-1, 4).sum(axis=1) + hm.octa_volumes()
    np.testing.assert_allclose(total, mesh.tet_volumes(), rtol=1e-12)


def test_vertices_never_move(mesh4, moving_sphere):
    for t in (0.0, 0.1, 0.3):
        cut = compute_cut(mesh4, moving_sphere, t, double_crossing="midpoint")
        hm = subdivide(mesh4, cut)
        assert np.array_equal(hm.node_coords[: mesh4.n_vertices], mesh4.vertices)


def test_flipped_level_set_swaps_coefficients(mesh4, growing_sphere):
    ls = growing_sphere
    cut = compute_cut(mesh4, ls, 0.2, double_crossing="midpoint")
    hm = subdivide(mesh4, cut, a1=7.0, a2=3.0)
    flip = type(cut)(**{**cut.__dict__, "level_set": ls.flipped()})
    hm2 = subdivide(mesh4, flip, a1=7.0, a2=3.0)
    np.testing.assert_array_equal(hm2.tet_coeff, np.where(hm.tet_coeff == 7.0, 3.0, 7.0))
    np.testing.assert_array_equal(hm2.octa_coeff, np.where(hm.octa_coeff == 7.0, 3.0, 7.0))


def test_far_sphere_gives_pure_refinement(mesh4):
    ls = LevelSet("growing_sphere", (5.0, 5.0, 5.0), 0.1, 0.0)
    cut = compute_cut(mesh4, ls, 0.0)
    hm = subdivide(mesh4, cut)
    ref = subdivide(mesh4, uncut_state(mesh4))
    assert np.array_equal(hm.node_coords, ref.node_coords)
    surf = reconstruct_surface(mesh4, cut)
    assert len(surf.triangles) == 0


def _tet_mesh_with_inside(k_inside):
    """Reference tet whose first ``k_inside`` vertices are inside a big sphere."""
    verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1.0]])
    pairs = np.array([(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
    mesh = MacroMesh(1, verts, np.array([[0, 1, 2, 3]]), pairs, np.arange(6)[None])
    if k_inside == 1:
        ls = LevelSet("growing_sphere", (0, 0, 0), 0.5, 0.0)
    else:
        ls = LevelSet("growing_sphere", (0.5, -0.5, 0), 0.85, 0.0)
    return mesh, ls


@pytest.mark.parametrize("k_inside,n_tri", [(1, 1), (2, 2)])
def test_marching_tet_cases(k_inside, n_tri):
    mesh, ls = _tet_mesh_with_inside(k_inside)
    cut = compute_cut(mesh, ls, 0.0)
    assert (cut.vertex_side < 0).sum() == k_inside
    surf = reconstruct_surface(mesh, cut)
    assert len(surf.triangles) == n_tri
    # outward orientation: normals point away from the inside vertices
    inside = mesh.vertices[cut.vertex_side < 0].mean(axis=0)
    for tri in surf.points[surf.triangles]:
        nrm = np.cross(tri[1] - tri[0], tri[2] - tri[0])
        assert nrm @ (tri.mean(axis=0) - inside) > 0


@pytest.mark.parametrize("center", [(0.5, 0.5, 0.5), (0.43, 0.51, 0.47), (0.6, 0.4, 0.55)])
def test_surface_closed_and_on_interface(mesh8, center):
    ls = LevelSet("growing_sphere", center, 0.2, 0.0)
    cut = compute_cut(mesh8, ls, 0.0, double_crossing="midpoint")
    surf = reconstruct_surface(mesh8, cut)
    assert surf.is_closed()
    assert np.abs(ls(surf.points, 0.0)).max() <= 1e-10
    assert surf.enclosed_volume() > 0


def test_deterministic_cut(mesh4, moving_sphere):
    a = compute_cut(mesh4, moving_sphere, 0.2, double_crossing="midpoint")
    b = compute_cut(mesh4, moving_sphere, 0.2, double_crossing="midpoint")
    assert np.array_equal(a.edge_param, b.edge_param)
    assert np.array_equal(a.node_side, b.node_side)
