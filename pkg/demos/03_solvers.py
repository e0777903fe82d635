"""
Comparing the linear solvers on one time step
=============================================

AMG-preconditioned CG and GMRES on the whole system, and the segregated
method that eliminates the vertex unknowns first.
"""

import numpy as np
import scipy.sparse.linalg as spla

from macroale import boundary_classify, build_macro_mesh, dof_layout
from macroale.ale import advance_ale
from macroale.assembly import assemble_system
from macroale.cutting import LevelSet, compute_cut, subdivide
from macroale.mesh import NodeTag
from macroale.solvers import schur_blocks, solve

n, dt = 8, 0.0625
mesh = build_macro_mesh(n)
layout = dof_layout(mesh)
sphere = LevelSet("moving_sphere", (0.125, 0.125, 0.125), 0.12, (1.0, 1.0, 1.0))

prev = compute_cut(mesh, sphere, 0.0, double_crossing="midpoint")
cut = compute_cut(mesh, sphere, dt, double_crossing="midpoint")
hm = subdivide(mesh, cut, a1=1e6, a2=1.0)
ale = advance_ale(prev, cut, mesh, dt)
print(f"largest mesh speed {ale.max_speed():.3f}")

g_D = {NodeTag.DIRICHLET_BOTTOM: (0, 0, 0), NodeTag.DIRICHLET_TOP: (1, 0, 0)}
system = assemble_system(hm, ale, np.zeros(layout.n_dofs), dt, boundary_classify(mesh), g_D, layout)
print(f"K: {system.K.shape[0]} rows, {system.K.nnz} nonzeros")

# %%
# The vertex block is diagonal, so the Schur complement is exact and cheap.
sb = schur_blocks(system.K, layout.n_vertex_dofs)
print(f"A_VV nonzeros {sb.A_VV.nnz} (= vertex DOFs {layout.n_vertex_dofs}), S nonzeros {sb.S.nnz}")

ref = spla.spsolve(system.K.tocsc(), system.f)
for method in ("cg", "gmres", "segregated"):
    u, rep = solve(system, method, tol=1e-9)
    err = np.abs(u - ref).max()
    print(f"{rep.method:9s} it={rep.iterations:3d} res={rep.rel_residual:.1e} err={err:.1e} {rep.seconds:.2f}s")
