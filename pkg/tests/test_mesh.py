
import numpy as np
import pytest

from macroale.errors import MeshError
from macroale.mesh import (
    LOCAL_EDGES,
    NodeTag,
    boundary_classify,
    build_macro_mesh,
    dof_layout,
    tag_points,
)


@pytest.mark.parametrize("n", range(1, 9))
def test_counts(n):
    m = build_macro_mesh(n)
    assert m.n_vertices == (n + 1) ** 3
    assert m.n_tets == 6 * n**3
    # refined node count equals the (2n+1)^3 grid of the midpoint refinement
    assert m.n_nodes == (2 * n + 1) ** 3
    assert m.h == pytest.approx(1.0 / n)


def test_single_cube():
    m = build_macro_mesh(1)
    assert (m.n_vertices, m.n_tets, m.n_edges) == (8, 6, 19)
    assert dof_layout(m).n_dofs == 81


def test_n32_counts():
    m = build_macro_mesh(32)
    layout = dof_layout(m)
    assert m.n_vertices == 35937
    assert m.n_tets == 196608
    assert layout.n_nodes == 274625
    assert layout.n_dofs == 823875


def test_edge_count_n4_matches_bruteforce():
    # frozen from brute-force enumeration of all Kuhn tet edges as point sets
    assert build_macro_mesh(4).n_edges == 604


def test_edges_unique_and_consistent(mesh4):
    m = mesh4
    assert len({tuple(e) for e in m.edges}) == m.n_edges
    for k in range(6):
        a, b = LOCAL_EDGES[k]
        ends = np.sort(m.macro_tets[:, [a, b]], axis=1)
        assert np.array_equal(m.edges[m.tet_edges[:, k]], ends)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_positive_orientation(n):
    m = build_macro_mesh(n)
    vol = m.tet_volumes()
    assert (vol > 0).all()
    assert vol.sum() == pytest.approx(1.0, abs=1e-12)


def test_conformity(mesh4):
    # every interior face is shared by exactly two tets, boundary faces by one
    faces = np.sort(mesh4.macro_tets[:, [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]]].reshape(-1, 3), axis=1)
    _, counts = np.unique(faces, axis=0, return_counts=True)
    assert set(counts) <= {1, 2}
    # 6 cube faces, n^2 squares each, 2 triangles per square
    assert (counts == 1).sum() == 6 * 4**2 * 2


def test_zero_resolution_rejected():
    with pytest.raises(MeshError):
        build_macro_mesh(0)


def test_dof_layout_ordering(mesh2):
    layout = dof_layout(mesh2)
    assert layout.n_dofs == 3 * (layout.n_vertices + layout.n_edges)
    assert layout.dof(0, 2) == 2
    assert layout.edge_node(0) == layout.n_vertices
    assert layout.vertex_dofs() == slice(0, 3 * layout.n_vertices)


def test_boundary_points():
    tags = tag_points([(0.5, 0.5, 0.0), (0.25, 0.75, 1.0), (0.5, 0.0, 0.5)])
    assert list(tags) == [NodeTag.DIRICHLET_BOTTOM, NodeTag.DIRICHLET_TOP, NodeTag.NEUMANN]


def test_bottom_count_n2(mesh2):
    # frozen from brute enumeration: 9 vertices + 16 edges lie in z=0
    bc = boundary_classify(mesh2)
    assert len(bc.nodes(NodeTag.DIRICHLET_BOTTOM)) == 25
    assert len(bc.nodes(NodeTag.DIRICHLET_TOP)) == 25
