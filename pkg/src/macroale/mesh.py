"""Fixed reference macro-tetrahedral mesh of the unit cube.

The cube is split into ``n**3`` cells and each cell into six tetrahedra
sharing the cell's main diagonal (Kuhn subdivision).  Every macro edge
carries one extra scalar node, so the scalar node set of the mesh is the
vertex set followed by the edge set.
"""
from dataclasses import dataclass, field
from enum import IntEnum
from itertools import permutations

import numpy as np

from .errors import MeshError

__all__ = [
    "LOCAL_EDGES",
    "MacroMesh",
    "DofLayout",
    "NodeTag",
    "BoundaryTags",
    "build_macro_mesh",
    "dof_layout",
    "boundary_classify",
    "signed_volumes",
]

#: local vertex pairs of the six tet edges, in ``tet_edges`` column order
LOCAL_EDGES = np.array([(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])

BOUNDARY_ATOL = 1e-12


def signed_volumes(p0, p1, p2, p3):
    """Signed volumes of a batch of tetrahedra given as ``(m, 3)`` arrays."""
    return np.einsum("ij,ij->i", p1 - p0, np.cross(p2 - p0, p3 - p0)) / 6.0


@dataclass(frozen=True)
class MacroMesh:
    """Reference macro mesh.  Arrays are treated as read-only."""

    resolution: int
    vertices: np.ndarray  # (V, 3)
    macro_tets: np.ndarray  # (T, 4)
    edges: np.ndarray  # (E, 2), sorted vertex pairs
    tet_edges: np.ndarray  # (T, 6), columns follow LOCAL_EDGES
    h: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "h", 1.0 / self.resolution)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_tets(self) -> int:
        return len(self.macro_tets)

    @property
    def n_nodes(self) -> int:
        return self.n_vertices + self.n_edges

    def edge_endpoints(self):
        """Return ``(p, q)``, the reference endpoint coordinates of every edge."""
        return self.vertices[self.edges[:, 0]], self.vertices[self.edges[:, 1]]

    def edge_lengths(self) -> np.ndarray:
        p, q = self.edge_endpoints()
        return np.linalg.norm(q - p, axis=1)

    def reference_node_coords(self) -> np.ndarray:
        """Coordinates of all scalar nodes with edge nodes at edge midpoints."""
        p, q = self.edge_endpoints()
        return np.vstack([self.vertices, 0.5 * (p + q)])

    def tet_volumes(self) -> np.ndarray:
        x = self.vertices[self.macro_tets]
        return signed_volumes(x[:, 0], x[:, 1], x[:, 2], x[:, 3])


def _kuhn_cell_tets():
    """The six Kuhn tets of the unit cell as corner-offset 4-tuples."""
    tets = []
    for perm in permutations(range(3)):
        path = [np.zeros(3, dtype=int)]
        for axis in perm:
            step = path[-1].copy()
            step[axis] += 1
            path.append(step)
        vol = np.linalg.det(np.array([path[1], path[2], path[3]]))
        if vol < 0:
            path[2], path[3] = path[3], path[2]
        tets.append(path)
    return np.array(tets)  # (6, 4, 3)


def build_macro_mesh(n: int) -> MacroMesh:
    """Build the Kuhn-split macro mesh of the unit cube with ``n`` cells per side.

    Parameters
    ----------
    n : int
        Number of cells along each coordinate direction, ``n >= 1``.

    Returns
    -------
    MacroMesh
        ``(n+1)**3`` vertices and ``6*n**3`` positively oriented tets.
    """
    if int(n) != n or n < 1:
        raise MeshError(f"mesh resolution must be a positive integer, got {n!r}")
    n = int(n)
    m = n + 1
    g = np.arange(m, dtype=float) / n
    # vertex index = i + m*j + m*m*k for grid point (i, j, k)
    zz, yy, xx = np.meshgrid(g, g, g, indexing="ij")
    vertices = np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])

    ci, cj, ck = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    corners = np.column_stack([ck.ravel(), cj.ravel(), ci.ravel()])  # x fastest
    offsets = _kuhn_cell_tets()
    # (cells, 6, 4, 3) integer grid coords
    pts = corners[:, None, None, :] + offsets[None, :, :, :]
    vid = pts[..., 0] + m * pts[..., 1] + m * m * pts[..., 2]
    macro_tets = vid.reshape(-1, 4).astype(np.int64)

    pairs = macro_tets[:, LOCAL_EDGES]  # (T, 6, 2)
    lo = np.minimum(pairs[..., 0], pairs[..., 1])
    hi = np.maximum(pairs[..., 0], pairs[..., 1])
    key = lo * vertices.shape[0] + hi
    uniq, inverse = np.unique(key.ravel(), return_inverse=True)
    edges = np.column_stack([uniq // vertices.shape[0], uniq % vertices.shape[0]])
    tet_edges = inverse.reshape(-1, 6).astype(np.int64)
    return MacroMesh(n, vertices, macro_tets, edges.astype(np.int64), tet_edges)


@dataclass(frozen=True)
class DofLayout:
    """Vertex-then-edge scalar node numbering with three components per node.

    Scalar node ``i`` owns vector DOFs ``3*i + c`` for ``c`` in ``0, 1, 2``.
    Nodes ``0..V-1`` are macro vertices, ``V..V+E-1`` edge nodes.
    """

    n_vertices: int
    n_edges: int
    ncomp: int = 3

    @property
    def n_nodes(self) -> int:
        return self.n_vertices + self.n_edges

    @property
    def n_dofs(self) -> int:
        return self.ncomp * self.n_nodes

    @property
    def n_vertex_dofs(self) -> int:
        return self.ncomp * self.n_vertices

    def dof(self, node, comp):
        return self.ncomp * np.asarray(node) + comp

    def edge_node(self, edge):
        """Scalar node index of global edge ``edge``."""
        return self.n_vertices + np.asarray(edge)

    def vertex_dofs(self) -> slice:
        return slice(0, self.n_vertex_dofs)

    def edge_dofs(self) -> slice:
        return slice(self.n_vertex_dofs, self.n_dofs)


def dof_layout(mesh: MacroMesh) -> DofLayout:
    return DofLayout(mesh.n_vertices, mesh.n_edges)


class NodeTag(IntEnum):
    NEUMANN = 0
    DIRICHLET_BOTTOM = 1
    DIRICHLET_TOP = 2


@dataclass(frozen=True)
class BoundaryTags:
    """Per scalar node boundary tag (a :class:`NodeTag` value)."""

    tags: np.ndarray

    def nodes(self, tag: NodeTag) -> np.ndarray:
        return np.flatnonzero(self.tags == tag)

    @property
    def dirichlet_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.tags != NodeTag.NEUMANN)


def tag_points(points) -> np.ndarray:
    """Classify reference points by their z coordinate."""
    z = np.asarray(points, dtype=float).reshape(-1, 3)[:, 2]
    tags = np.full(len(z), NodeTag.NEUMANN, dtype=np.int8)
    tags[np.abs(z) <= BOUNDARY_ATOL] = NodeTag.DIRICHLET_BOTTOM
    tags[np.abs(z - 1.0) <= BOUNDARY_ATOL] = NodeTag.DIRICHLET_TOP
    return tags


def boundary_classify(mesh: MacroMesh) -> BoundaryTags:
    """Tag vertices and edge nodes (via their reference midpoints) by z-plane."""
    return BoundaryTags(tag_points(mesh.reference_node_coords()))
