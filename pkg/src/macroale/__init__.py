"""Parabolic moving/growing interface problems on a fixed macro-tet mesh.

Interfaces are captured by placing edge nodes of a fixed Kuhn mesh at the
level-set intersections; the resulting small node motion enters the heat
equation as an ALE convection term.  Each macro tet is a hybrid element of
four tets and one octahedron.
"""
from .ale import AleState, advance_ale, transfer_previous_solution
from .amg import AmgHierarchy, build_amg
from .assembly import (
    BlockSystem,
    assemble_operators,
    assemble_system,
    octa_element_matrices,
    tet_element_matrices,
)
from .cutting import (
    CutState,
    HybridMesh,
    LevelSet,
    LevelSetKind,
    SurfaceMesh,
    compute_cut,
    eval_level_set,
    reconstruct_surface,
    subdivide,
)
from .driver import PRESETS, ScenarioConfig, parse_config, run_simulation
from .errors import (
    AssemblyError,
    ConfigError,
    DegenerateCutError,
    MacroAleError,
    MeshError,
    ResolutionError,
    SolverError,
)
from .io import write_surface_obj, write_surface_vtk, write_vtk
from .mesh import (
    BoundaryTags,
    DofLayout,
    MacroMesh,
    NodeTag,
    boundary_classify,
    build_macro_mesh,
    dof_layout,
)
from .solvers import SolveReport, solve, solve_gmres, solve_pcg, solve_segregated

__version__ = "0.1.0"
