"""Interface capturing on the macro mesh.

Edges whose endpoints lie on different sides of the level set receive an
edge node at the intersection point; all other edge nodes sit at the edge
midpoint.  Each macro tet is then split into four corner tets and one
octahedron spanned by its six edge nodes.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateCutError, ResolutionError
from .mesh import MacroMesh, signed_volumes

__all__ = [
    "LevelSetKind",
    "LevelSet",
    "CutState",
    "HybridMesh",
    "SurfaceMesh",
    "eval_level_set",
    "compute_cut",
    "subdivide",
    "reconstruct_surface",
    "SUB_TETS",
    "OCTA",
    "OCTA_SPLIT",
    "EPS_CUT",
]

EPS_CUT = 0.05
SIDE_TIE = 1e-12
BISECTION_TOL = 1e-12

# edge node k (local 4..9) -> column of MacroMesh.tet_edges
_EDGE_NODE_COLUMN = np.array([0, 3, 1, 2, 4, 5])

# local macro-element numbering: 0-3 vertices, 4=(0,1) 5=(1,2) 6=(0,2)
# 7=(0,3) 8=(1,3) 9=(2,3)
SUB_TETS = np.array([[0, 4, 6, 7], [4, 1, 5, 8], [6, 5, 2, 9], [7, 8, 9, 3]])
#: octahedron as (apex, equator x4, apex)
OCTA = np.array([6, 4, 5, 9, 7, 8])
#: split of an octahedron into 8 tets around the auxiliary centre (local 6)
OCTA_SPLIT = np.array(
    [
        [0, 1, 2, 6],
        [0, 2, 3, 6],
        [0, 3, 4, 6],
        [0, 1, 4, 6],
        [5, 1, 4, 6],
        [5, 1, 2, 6],
        [5, 2, 3, 6],
        [5, 3, 4, 6],
    ]
)


def _orient_octa_split():
    # fix the orientation of each split tet on a positive reference tet
    ref = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])
    pairs = [(0, 1), (1, 2), (0, 2), (0, 3), (1, 3), (2, 3)]
    local = np.vstack([ref, [(ref[a] + ref[b]) / 2 for a, b in pairs]])
    octa = local[OCTA]
    pts = np.vstack([octa, octa.mean(axis=0)])
    split = OCTA_SPLIT.copy()
    for row in split:
        x = pts[row]
        if signed_volumes(*[x[i][None] for i in range(4)])[0] < 0:
            row[[1, 2]] = row[[2, 1]]
    return split


OCTA_SPLIT = _orient_octa_split()


class LevelSetKind(str, Enum):
    MOVING_SPHERE = "moving_sphere"
    GROWING_SPHERE = "growing_sphere"


@dataclass(frozen=True)
class LevelSet:
    """Sphere level set, negative inside the immersed object.

    ``velocity`` is a 3-vector translation speed for a moving sphere and a
    scalar radial growth speed for a growing one.
    """

    kind: LevelSetKind
    center0: tuple
    radius0: float
    velocity: object = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", LevelSetKind(self.kind))
        if not self.radius0 > 0:
            raise ValueError("radius0 must be positive")
        if self.kind is LevelSetKind.MOVING_SPHERE:
            v = np.broadcast_to(np.asarray(self.velocity, dtype=float), (3,))
            object.__setattr__(self, "velocity", tuple(float(c) for c in v))
        else:
            object.__setattr__(self, "velocity", float(self.velocity))
        object.__setattr__(self, "center0", tuple(float(c) for c in self.center0))

    def center(self, t: float) -> np.ndarray:
        c = np.asarray(self.center0)
        if self.kind is LevelSetKind.MOVING_SPHERE:
            return c + np.asarray(self.velocity) * t
        return c

    def radius(self, t: float) -> float:
        if self.kind is LevelSetKind.GROWING_SPHERE:
            return self.radius0 + self.velocity * t
        return self.radius0

    def __call__(self, x, t: float):
        x = np.asarray(x, dtype=float)
        return np.linalg.norm(x - self.center(t), axis=-1) - self.radius(t)

    def flipped(self) -> "FlippedLevelSet":
        return FlippedLevelSet(self)


@dataclass(frozen=True)
class FlippedLevelSet:
    """Negated level set: swaps inside and outside of ``base``."""

    base: LevelSet

    def __call__(self, x, t):
        return -self.base(x, t)


def eval_level_set(ls, x, t: float):
    if t < 0:
        raise ValueError("time must be non-negative")
    return ls(x, t)


def _is_inside(phi):
    return phi <= SIDE_TIE


@dataclass(frozen=True)
class CutState:
    """Edge-node placement at one time level.

    ``edge_param`` is the clamped position used for the mesh, ``edge_root``
    the unclamped bisection root (0.5 on uncut edges).
    """

    time: float
    level_set: object
    edge_param: np.ndarray
    edge_root: np.ndarray
    edge_is_cut: np.ndarray
    node_side: np.ndarray
    eps_cut: float = EPS_CUT
    n_double_crossed: int = 0

    @property
    def vertex_side(self) -> np.ndarray:
        return self.node_side[: self.n_vertices]

    @property
    def n_vertices(self) -> int:
        return len(self.node_side) - len(self.edge_param)


def _bisect(ls, p, q, t, inside_p):
    lo = np.zeros(len(p))
    hi = np.ones(len(p))
    d = q - p
    while True:
        width = hi - lo
        if width.max(initial=0.0) <= BISECTION_TOL:
            break
        mid = 0.5 * (lo + hi)
        same = _is_inside(ls(p + mid[:, None] * d, t)) == inside_p
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)


def compute_cut(
    mesh: MacroMesh, ls, t: float, eps_cut: float = EPS_CUT, double_crossing: str = "raise"
) -> CutState:
    """Intersect the level set at time ``t`` with every macro edge.

    An edge whose endpoints share a side but whose midpoint lies on the
    other side is crossed twice by the interface.  With
    ``double_crossing="raise"`` this is an error; with ``"midpoint"`` the
    edge is left uncut (the feature is below mesh resolution).

    Raises
    ------
    ResolutionError
        On a double crossing when ``double_crossing="raise"``.
    """
    if double_crossing not in ("raise", "midpoint"):
        raise ValueError("double_crossing must be 'raise' or 'midpoint'")
    if not 0 < eps_cut < 0.5:
        raise ValueError("eps_cut must lie in (0, 0.5)")
    inside_v = _is_inside(ls(mesh.vertices, t))
    p, q = mesh.edge_endpoints()
    ia, ib = mesh.edges[:, 0], mesh.edges[:, 1]
    is_cut = inside_v[ia] != inside_v[ib]

    inside_mid = _is_inside(ls(0.5 * (p + q), t))
    double = ~is_cut & (inside_mid != inside_v[ia])
    if double.any() and double_crossing == "raise":
        e = int(np.flatnonzero(double)[0])
        raise ResolutionError(
            f"interface crosses edge {e} ({mesh.edges[e, 0]}-{mesh.edges[e, 1]}) "
            f"twice at t={t:g}; use a finer mesh"
        )

    root = np.full(mesh.n_edges, 0.5)
    cut_ids = np.flatnonzero(is_cut)
    if len(cut_ids):
        root[cut_ids] = _bisect(ls, p[cut_ids], q[cut_ids], t, inside_v[ia[cut_ids]])
    param = np.where(is_cut, np.clip(root, eps_cut, 1.0 - eps_cut), 0.5)

    side_v = np.where(inside_v, -1, 1).astype(np.int8)
    side_e = np.where(is_cut, 0, np.where(inside_mid, -1, 1)).astype(np.int8)
    return CutState(
        float(t), ls, param, root, is_cut, np.concatenate([side_v, side_e]), eps_cut,
        int(double.sum()),
    )


def uncut_state(mesh: MacroMesh, t: float = 0.0) -> CutState:
    """Pure midpoint placement, no interface."""
    half = np.full(mesh.n_edges, 0.5)
    sides = np.ones(mesh.n_nodes, dtype=np.int8)
    return CutState(float(t), None, half, half.copy(), np.zeros(mesh.n_edges, bool), sides)


def local_nodes(mesh: MacroMesh) -> np.ndarray:
    """Global scalar node ids of the 10 local nodes of every macro tet."""
    enodes = mesh.n_vertices + mesh.tet_edges[:, _EDGE_NODE_COLUMN]
    return np.hstack([mesh.macro_tets, enodes])


def place_nodes(mesh: MacroMesh, edge_param) -> np.ndarray:
    p, q = mesh.edge_endpoints()
    return np.vstack([mesh.vertices, p + np.asarray(edge_param)[:, None] * (q - p)])


@dataclass(frozen=True)
class HybridMesh:
    """Current-configuration hybrid mesh: 4 tets and 1 octahedron per macro tet.

    Sub-tet ``4*k + j`` and octahedron ``k`` belong to macro tet ``k``.
    """

    node_coords: np.ndarray  # (V+E, 3)
    sub_tets: np.ndarray  # (4T, 4)
    octas: np.ndarray  # (T, 6)
    tet_coeff: np.ndarray  # (4T,)
    octa_coeff: np.ndarray  # (T,)

    @property
    def n_nodes(self) -> int:
        return len(self.node_coords)

    def tet_volumes(self) -> np.ndarray:
        x = self.node_coords[self.sub_tets]
        return signed_volumes(x[:, 0], x[:, 1], x[:, 2], x[:, 3])

    def octa_points(self) -> np.ndarray:
        """``(T, 7, 3)`` octahedron nodes with the auxiliary centre appended."""
        x = self.node_coords[self.octas]
        return np.concatenate([x, x.mean(axis=1, keepdims=True)], axis=1)

    def octa_split_volumes(self) -> np.ndarray:
        x = self.octa_points()[:, OCTA_SPLIT]  # (T, 8, 4, 3)
        x = x.reshape(-1, 4, 3)
        return signed_volumes(x[:, 0], x[:, 1], x[:, 2], x[:, 3]).reshape(-1, 8)

    def octa_volumes(self) -> np.ndarray:
        return self.octa_split_volumes().sum(axis=1)


def subdivide(mesh: MacroMesh, cut: CutState, a1: float = 1.0, a2: float = 1.0) -> HybridMesh:
    """Split every macro tet into its hybrid sub-elements.

    Sub-elements whose centroid lies inside the object (level set < 0)
    receive coefficient ``a1``, all others ``a2``.
    """
    coords = place_nodes(mesh, cut.edge_param)
    loc = local_nodes(mesh)
    sub_tets = loc[:, SUB_TETS].reshape(-1, 4)
    octas = loc[:, OCTA]

    x = coords[sub_tets]
    vol = signed_volumes(x[:, 0], x[:, 1], x[:, 2], x[:, 3])
    tmp = HybridMesh(coords, sub_tets, octas, None, None)
    split_vol = tmp.octa_split_volumes()
    bad = np.flatnonzero(vol <= 0) // 4
    bad = np.union1d(bad, np.flatnonzero((split_vol <= 0).any(axis=1)))
    if len(bad):
        raise DegenerateCutError(
            f"non-positive sub-element volume in macro element {int(bad[0])} "
            f"({len(bad)} affected)"
        )

    if cut.level_set is None:
        tet_coeff = np.full(len(sub_tets), float(a2))
        octa_coeff = np.full(len(octas), float(a2))
    else:
        tet_centroid = x.mean(axis=1)
        pts = tmp.octa_points()[:, OCTA_SPLIT]  # (T, 8, 4, 3)
        w = split_vol / split_vol.sum(axis=1, keepdims=True)
        octa_centroid = np.einsum("ts,tsd->td", w, pts.mean(axis=2))
        t = cut.time
        tet_coeff = np.where(cut.level_set(tet_centroid, t) < 0, a1, a2).astype(float)
        octa_coeff = np.where(cut.level_set(octa_centroid, t) < 0, a1, a2).astype(float)
    return HybridMesh(coords, sub_tets, octas, tet_coeff, octa_coeff)


@dataclass(frozen=True)
class SurfaceMesh:
    """Indexed triangle surface.  ``node_ids`` are global edge-node indices."""

    points: np.ndarray  # (k, 3)
    triangles: np.ndarray  # (m, 3) indices into points
    node_ids: np.ndarray  # (k,)

    def enclosed_volume(self) -> float:
        """Signed volume via the divergence theorem (outward normals give > 0)."""
        if len(self.triangles) == 0:
            return 0.0
        x = self.points[self.triangles]
        return float(np.einsum("ij,ij->i", x[:, 0], np.cross(x[:, 1], x[:, 2])).sum() / 6.0)

    def is_closed(self) -> bool:
        """True if every triangle edge is shared by exactly two triangles."""
        if len(self.triangles) == 0:
            return True
        tri = self.triangles
        e = np.vstack([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
        e.sort(axis=1)
        _, counts = np.unique(e, axis=0, return_counts=True)
        return bool((counts == 2).all())


def reconstruct_surface(mesh: MacroMesh, cut: CutState) -> SurfaceMesh:
    """Marching-tetrahedra triangulation of the captured interface.

    Surface vertices sit at the unclamped intersection points of the cut
    edges.  Triangles are oriented with normals pointing out of the object.
    """
    inside = cut.vertex_side < 0
    p, q = mesh.edge_endpoints()
    roots = p + cut.edge_root[:, None] * (q - p)
    ins = inside[mesh.macro_tets]  # (T, 4)
    n_in = ins.sum(axis=1)
    ncut = cut.edge_is_cut[mesh.tet_edges].sum(axis=1)
    expected = np.where((n_in == 0) | (n_in == 4), 0, np.where(n_in == 2, 4, 3))
    if (ncut != expected).any():
        k = int(np.flatnonzero(ncut != expected)[0])
        raise ResolutionError(f"inconsistent cut pattern in macro element {k}")

    edge_col = {}
    for col, (a, b) in enumerate(((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))):
        edge_col[(a, b)] = edge_col[(b, a)] = col

    tris = []
    for k in np.flatnonzero(ncut > 0):
        verts = mesh.macro_tets[k]
        loc_in = [i for i in range(4) if ins[k, i]]
        loc_out = [i for i in range(4) if not ins[k, i]]
        c_in = mesh.vertices[verts[loc_in]].mean(axis=0)
        c_out = mesh.vertices[verts[loc_out]].mean(axis=0)
        outward = c_out - c_in
        if len(loc_in) == 2:
            a, b = loc_in
            c, d = loc_out
            cyc = [mesh.tet_edges[k, edge_col[pair]] for pair in ((a, c), (a, d), (b, d), (b, c))]
            diag0 = np.linalg.norm(roots[cyc[0]] - roots[cyc[2]])
            diag1 = np.linalg.norm(roots[cyc[1]] - roots[cyc[3]])
            if np.isclose(diag0, diag1, rtol=1e-12, atol=0.0):
                use0 = min(cyc[0], cyc[2]) < min(cyc[1], cyc[3])
            else:
                use0 = diag0 < diag1
            if use0:
                faces = [(cyc[0], cyc[1], cyc[2]), (cyc[0], cyc[2], cyc[3])]
            else:
                faces = [(cyc[1], cyc[2], cyc[3]), (cyc[1], cyc[3], cyc[0])]
        else:
            lone = loc_in[0] if len(loc_in) == 1 else loc_out[0]
            others = [i for i in range(4) if i != lone]
            faces = [tuple(mesh.tet_edges[k, edge_col[(lone, o)]] for o in others)]
        for f in faces:
            x = roots[list(f)]
            normal = np.cross(x[1] - x[0], x[2] - x[0])
            tris.append(f if normal @ outward > 0 else (f[0], f[2], f[1]))

    if not tris:
        return SurfaceMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64), np.zeros(0, dtype=np.int64))
    tris = np.asarray(tris, dtype=np.int64)
    used, local = np.unique(tris, return_inverse=True)
    return SurfaceMesh(roots[used], local.reshape(-1, 3), mesh.n_vertices + used)
