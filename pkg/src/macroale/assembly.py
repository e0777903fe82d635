"""Finite element assembly on the hybrid tet/octahedron mesh.

One implicit Euler step of the ALE heat problem reads, per vector
component,

    (M/dt + A - C) u^n = M/dt u^{n-1} + g_N terms

with the P1 mass ``M``, diffusion ``A`` (coefficient ``a``) and the mesh
convection ``C_ij = (w . grad phi_j, phi_i)``.  Octahedra carry an
auxiliary centre node that is eliminated by constraining its value to the
mean of the six octahedron nodes.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .cutting import OCTA_SPLIT, HybridMesh
from .errors import AssemblyError, DegenerateCutError
from .mesh import BoundaryTags, DofLayout, MacroMesh, NodeTag

__all__ = [
    "ElementMatrices",
    "BlockSystem",
    "tet_element_matrices",
    "octa_element_matrices",
    "OCTA_CONSTRAINT",
    "assemble_operators",
    "assemble_system",
    "neumann_load",
]

_MASS_REF = (np.ones((4, 4)) + np.eye(4)) / 20.0

#: 7x6 map from the six octahedron values to the values incl. the centre
OCTA_CONSTRAINT = np.vstack([np.eye(6), np.full((1, 6), 1.0 / 6.0)])


@dataclass
class ElementMatrices:
    """Scalar element matrices of a batch of elements, each ``(m, k, k)``."""

    mass: np.ndarray
    diffusion: np.ndarray
    convection: np.ndarray
    dt: float

    @property
    def matrix(self) -> np.ndarray:
        return self.mass / self.dt + self.diffusion - self.convection


def _p1_gradients(x):
    """Volumes ``(m,)`` and barycentric gradients ``(m, 4, 3)`` of tets ``x``."""
    jac = x[:, 1:] - x[:, :1]  # rows are edge vectors
    det = np.linalg.det(jac)
    vol = det / 6.0
    if np.any(vol <= 0):
        raise DegenerateCutError("non-positive tetrahedron volume")
    inv = np.linalg.inv(jac)  # column k = grad of barycentric k+1
    g = np.empty((len(x), 4, 3))
    g[:, 1:] = np.transpose(inv, (0, 2, 1))
    g[:, 0] = -g[:, 1:].sum(axis=1)
    return vol, g


def _tet_batch(x, a, w, dt):
    x = np.asarray(x, dtype=float)
    if x.ndim == 2:
        x = x[None]
    m = len(x)
    a = np.broadcast_to(np.asarray(a, dtype=float), (m,))
    w = np.zeros((m, 4, 3)) if w is None else np.broadcast_to(np.asarray(w, dtype=float), (m, 4, 3))
    vol, g = _p1_gradients(x)
    mass = vol[:, None, None] * _MASS_REF
    diff = (a * vol)[:, None, None] * np.einsum("mid,mjd->mij", g, g)
    # nodal quadrature: phi_i vanishes at all nodes but i
    conv = (vol / 4.0)[:, None, None] * np.einsum("mid,mjd->mij", w, g)
    return ElementMatrices(mass, diff, conv, float(dt))


def tet_element_matrices(coords, a, w_nodes=None, dt=1.0) -> ElementMatrices:
    """P1 element matrices of one tet ``(4, 3)`` or a batch ``(m, 4, 3)``.

    Mass and diffusion are integrated exactly; the convection term uses the
    four-point vertex rule with ``w`` interpolated linearly.
    """
    return _tet_batch(coords, a, w_nodes, dt)


def octa_element_matrices(coords, a, w_nodes=None, dt=1.0, condense=True) -> ElementMatrices:
    """Element matrices of one octahedron ``(6, 3)`` or a batch ``(m, 6, 3)``.

    Node order is (apex, equator x4, apex).  A centre node at the vertex
    mean splits the octahedron into eight tets; with ``condense=True`` the
    centre is eliminated through ``u_c = mean(u_0..u_5)`` giving 6x6
    matrices, otherwise the 7x7 matrices are returned.
    """
    x = np.asarray(coords, dtype=float)
    if x.ndim == 2:
        x = x[None]
    m = len(x)
    x7 = np.concatenate([x, x.mean(axis=1, keepdims=True)], axis=1)
    if w_nodes is None:
        w7 = np.zeros((m, 7, 3))
    else:
        w = np.broadcast_to(np.asarray(w_nodes, dtype=float), (m, 6, 3))
        w7 = np.concatenate([w, w.mean(axis=1, keepdims=True)], axis=1)
    a = np.repeat(np.broadcast_to(np.asarray(a, dtype=float), (m,)), 8)
    try:
        sub = _tet_batch(
            x7[:, OCTA_SPLIT].reshape(-1, 4, 3), a, w7[:, OCTA_SPLIT].reshape(-1, 4, 3), dt
        )
    except DegenerateCutError:
        raise DegenerateCutError("non-positive octahedron split-tet volume") from None

    rows = np.repeat(OCTA_SPLIT, 4, axis=1).ravel()
    cols = np.tile(OCTA_SPLIT, (1, 4)).ravel()

    def gather(e, symmetric=False):
        out = np.zeros((m, 7, 7))
        np.add.at(out, (slice(None), rows, cols), e.reshape(m, -1))
        if condense:
            out = OCTA_CONSTRAINT.T @ out @ OCTA_CONSTRAINT
        if symmetric:
            # matmul rounding is not symmetric; keep the global matrix exactly so
            out = 0.5 * (out + out.transpose(0, 2, 1))
        return out

    return ElementMatrices(
        gather(sub.mass, True), gather(sub.diffusion, True), gather(sub.convection), float(dt)
    )


def _chunks(m, workers):
    bounds = np.linspace(0, m, max(1, workers) + 1).astype(int)
    return [slice(bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1)]


def _scatter(conn, blocks, n):
    k = conn.shape[1]
    rows = np.repeat(conn, k, axis=1).ravel()
    cols = np.tile(conn, (1, k)).ravel()
    return sp.coo_matrix((blocks.ravel(), (rows, cols)), shape=(n, n)).tocsr()


@dataclass
class ScalarOperators:
    """Global scalar mass, diffusion and convection matrices (node x node)."""

    mass: sp.csr_matrix
    diffusion: sp.csr_matrix
    convection: sp.csr_matrix


def assemble_operators(hm: HybridMesh, w_nodes=None, workers: int = 1) -> ScalarOperators:
    """Assemble the scalar operators over all sub-tets and octahedra.

    Element batches are split into ``workers`` contiguous chunks and merged
    in chunk order, so the result does not depend on ``workers``.
    """
    n = hm.n_nodes
    w = np.zeros((n, 3)) if w_nodes is None else np.asarray(w_nodes, dtype=float)
    if not (np.isfinite(hm.node_coords).all() and np.isfinite(w).all()):
        raise AssemblyError("non-finite node coordinates or mesh velocity")

    def tet_job(s):
        conn = hm.sub_tets[s]
        return tet_element_matrices(hm.node_coords[conn], hm.tet_coeff[s], w[conn])

    def octa_job(s):
        conn = hm.octas[s]
        return octa_element_matrices(hm.node_coords[conn], hm.octa_coeff[s], w[conn])

    tet_parts = _chunks(len(hm.sub_tets), workers)
    octa_parts = _chunks(len(hm.octas), workers)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            tets = list(pool.map(tet_job, tet_parts))
            octs = list(pool.map(octa_job, octa_parts))
    else:
        tets = [tet_job(s) for s in tet_parts]
        octs = [octa_job(s) for s in octa_parts]

    def build(attr, symmetric=False):
        t = np.concatenate([getattr(e, attr) for e in tets])
        o = np.concatenate([getattr(e, attr) for e in octs])
        out = _scatter(hm.sub_tets, t, n) + _scatter(hm.octas, o, n)
        if symmetric:
            # duplicate summation order differs between (i, j) and (j, i)
            out = (0.5 * (out + out.T)).tocsr()
        return out

    return ScalarOperators(build("mass", True), build("diffusion", True), build("convection"))


def _macro_boundary_faces(mesh: MacroMesh):
    """Boundary faces of the macro mesh as (tet, local vertex triple) rows."""
    faces = np.array([[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]])
    tri = mesh.macro_tets[:, faces]  # (T, 4, 3)
    x = mesh.vertices[tri]  # (T, 4, 3, 3)
    on = np.zeros(tri.shape[:2], dtype=bool)
    for axis in range(3):
        for val in (0.0, 1.0):
            on |= (np.abs(x[..., axis] - val) <= 1e-12).all(axis=-1)
    t, f = np.nonzero(on)
    return t, faces[f]


def neumann_load(mesh: MacroMesh, hm: HybridMesh, bc: BoundaryTags, g_N) -> np.ndarray:
    """Nodal load ``<g_N, v>`` over boundary faces not lying on a Dirichlet plane.

    ``g_N`` maps an ``(m, 3)`` array of points to ``(m, 3)`` flux vectors; it
    is evaluated once per surface triangle at the centroid.
    """
    from .cutting import local_nodes

    load = np.zeros((hm.n_nodes, 3))
    t, loc = _macro_boundary_faces(mesh)
    if len(t) == 0:
        return load.ravel()
    ln = local_nodes(mesh)
    edge_local = {(0, 1): 4, (1, 2): 5, (0, 2): 6, (0, 3): 7, (1, 3): 8, (2, 3): 9}

    def enode(a, b):
        return edge_local[(min(a, b), max(a, b))]

    tris = []
    for ti, (a, b, c) in zip(t, loc.tolist()):
        ab, bc_, ca = enode(a, b), enode(b, c), enode(c, a)
        for tri in ((a, ab, ca), (ab, b, bc_), (ca, bc_, c), (ab, bc_, ca)):
            tris.append(ln[ti, list(tri)])
    tris = np.asarray(tris)
    # faces on z=0 or z=1 have all nodes Dirichlet-tagged
    keep = ~(bc.tags[tris] != NodeTag.NEUMANN).all(axis=1)
    tris = tris[keep]
    x = hm.node_coords[tris]
    area = 0.5 * np.linalg.norm(np.cross(x[:, 1] - x[:, 0], x[:, 2] - x[:, 0]), axis=1)
    g = np.asarray(g_N(x.mean(axis=1)), dtype=float).reshape(-1, 3)
    contrib = (area / 3.0)[:, None] * g
    for j in range(3):
        np.add.at(load, tris[:, j], contrib)
    return load.ravel()


@dataclass
class BlockSystem:
    """Dirichlet-reduced system ``K u = f`` in vertex-then-edge node order.

    DOF ``3*i + c`` is component ``c`` of scalar node ``i``.
    """

    K: sp.csr_matrix
    f: np.ndarray
    dirichlet_mask: np.ndarray
    dirichlet_values: np.ndarray
    layout: DofLayout
    operators: ScalarOperators = None

    def blocks(self):
        """Return ``(A_VV, A_VE, A_EV, A_EE)`` as CSR matrices."""
        nv = self.layout.n_vertex_dofs
        K = self.K
        return (
            K[:nv, :nv].tocsr(),
            K[:nv, nv:].tocsr(),
            K[nv:, :nv].tocsr(),
            K[nv:, nv:].tocsr(),
        )

    def rhs_blocks(self):
        nv = self.layout.n_vertex_dofs
        return self.f[:nv], self.f[nv:]


def _dirichlet_values(bc: BoundaryTags, g_D, ncomp=3):
    mask = bc.tags != NodeTag.NEUMANN
    vals = np.zeros((len(bc.tags), ncomp))
    if callable(g_D):
        for tag in (NodeTag.DIRICHLET_BOTTOM, NodeTag.DIRICHLET_TOP):
            ids = bc.nodes(tag)
            if len(ids):
                vals[ids] = g_D(tag)
    else:
        for tag, value in dict(g_D).items():
            vals[bc.nodes(NodeTag(tag))] = value
    return np.repeat(mask, ncomp), vals.ravel()


def assemble_system(
    hm: HybridMesh,
    ale,
    u_prev,
    dt: float,
    bc: BoundaryTags,
    g_D,
    layout: DofLayout,
    g_N=None,
    mesh: MacroMesh = None,
    workers: int = 1,
) -> BlockSystem:
    """Assemble and Dirichlet-reduce one implicit Euler step.

    Parameters
    ----------
    hm : HybridMesh
        Mesh in the current configuration.
    ale : AleState or None
        Supplies the nodal mesh velocity; ``None`` means no mesh motion.
    u_prev : ndarray
        Previous solution, already transferred to the current configuration.
    g_D : mapping or callable
        Dirichlet data per :class:`NodeTag` (3-vectors).
    g_N : callable, optional
        Neumann flux; requires ``mesh``.  Omitted means homogeneous.
    """
    u_prev = np.asarray(u_prev, dtype=float)
    if u_prev.shape != (layout.n_dofs,):
        raise AssemblyError(f"u_prev has shape {u_prev.shape}, expected ({layout.n_dofs},)")
    if hm.n_nodes != layout.n_nodes:
        raise AssemblyError("hybrid mesh does not match the DOF layout")
    if not np.isfinite(u_prev).all():
        raise AssemblyError("non-finite values in the previous solution")
    w = None if ale is None else ale.w_nodes
    ops = assemble_operators(hm, w, workers=workers)
    scalar = ops.mass / dt + ops.diffusion - ops.convection
    eye3 = sp.identity(layout.ncomp, format="csr")
    K = sp.kron(scalar, eye3, format="csr")
    f = sp.kron(ops.mass / dt, eye3, format="csr") @ u_prev
    if g_N is not None:
        if mesh is None:
            raise AssemblyError("a Neumann load needs the macro mesh")
        f = f + neumann_load(mesh, hm, bc, g_N)

    mask, values = _dirichlet_values(bc, g_D, layout.ncomp)
    K, f = _eliminate_dirichlet(K, f, mask, values)
    return BlockSystem(K, f, mask, values, layout, ops)


def _eliminate_dirichlet(K, f, mask, values):
    g = np.where(mask, values, 0.0)
    f = f - K @ g
    keep = sp.diags((~mask).astype(float))
    K = (keep @ K @ keep + sp.diags(mask.astype(float))).tocsr()
    K.eliminate_zeros()
    K.sort_indices()
    f = np.where(mask, values, f)
    return K, f
