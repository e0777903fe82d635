"""
Macro mesh, level-set cut and hybrid subdivision
================================================

Build the Kuhn-split unit cube, cut it with a sphere and look at the
resulting tet/octahedron mesh.
"""

import numpy as np

from macroale import build_macro_mesh, dof_layout
from macroale.cutting import LevelSet, compute_cut, subdivide

# an 8x8x8 cube, six tets per cell
mesh = build_macro_mesh(8)
layout = dof_layout(mesh)
print(f"vertices {mesh.n_vertices}, edges {mesh.n_edges}, macro tets {mesh.n_tets}")
print(f"scalar nodes {layout.n_nodes}, vector DOFs {layout.n_dofs}")

# %%
# A sphere that will move along the cube diagonal.  At t=0.25 its centre
# sits on the mesh vertex (0.375, 0.375, 0.375).
sphere = LevelSet("moving_sphere", (0.125, 0.125, 0.125), 0.12, (1.0, 1.0, 1.0))
cut = compute_cut(mesh, sphere, 0.25, double_crossing="midpoint")
print(f"cut edges: {cut.edge_is_cut.sum()} of {mesh.n_edges}")
print("edge parameters of the cut edges:", np.round(cut.edge_param[cut.edge_is_cut], 3))

# %%
# Edge nodes slide to the interface; every macro element becomes four
# corner tets and one octahedron.  Elements whose centroid is inside the
# sphere get the large coefficient.
hm = subdivide(mesh, cut, a1=1e6, a2=1.0)
vol = hm.tet_volumes().sum() + hm.octa_volumes().sum()
print(f"sub-tets {hm.sub_tets.reshape(-1, 4).shape[0]}, octahedra {len(hm.octas)}, volume {vol:.15f}")
print(f"elements inside: {(hm.tet_coeff == 1e6).sum()} tets, {(hm.octa_coeff == 1e6).sum()} octahedra")
