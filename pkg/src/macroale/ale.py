"""Discrete ALE displacement and mesh velocity on the reference mesh."""
from dataclasses import dataclass

import numpy as np

from .cutting import CutState
from .errors import ConfigError
from .mesh import MacroMesh

__all__ = ["AleState", "advance_ale", "displacement", "transfer_previous_solution"]


def displacement(mesh: MacroMesh, cut: CutState) -> np.ndarray:
    """Nodal displacement from the midpoint configuration, ``(V+E, 3)``.

    Vertices never move; an edge node moves along its edge by
    ``(s - 0.5) * (q - p)``.
    """
    p, q = mesh.edge_endpoints()
    d = np.zeros((mesh.n_nodes, 3))
    d[mesh.n_vertices :] = (cut.edge_param - 0.5)[:, None] * (q - p)
    return d


@dataclass(frozen=True)
class AleState:
    d_prev: np.ndarray
    d_curr: np.ndarray
    w_nodes: np.ndarray
    dt: float

    def max_speed(self) -> float:
        if len(self.w_nodes) == 0:
            return 0.0
        return float(np.linalg.norm(self.w_nodes, axis=1).max())


def advance_ale(prev: CutState, curr: CutState, mesh: MacroMesh, dt: float) -> AleState:
    """Finite-difference mesh velocity between two consecutive cut states."""
    if not dt > 0:
        raise ConfigError(f"time step must be positive, got {dt!r}")
    if len(prev.edge_param) != mesh.n_edges or len(curr.edge_param) != mesh.n_edges:
        raise ValueError("cut states do not match the mesh")
    d0 = displacement(mesh, prev)
    d1 = displacement(mesh, curr)
    return AleState(d0, d1, (d1 - d0) / dt, float(dt))


def transfer_previous_solution(u_prev, n_dofs=None) -> np.ndarray:
    """Carry the previous solution onto the current configuration.

    Nodal coefficients move with their nodes, so the composed ALE map acts
    as the identity on the coefficient vector.
    """
    u = np.asarray(u_prev, dtype=float)
    if n_dofs is not None and u.shape != (n_dofs,):
        raise ValueError(f"expected a vector of {n_dofs} DOFs, got shape {u.shape}")
    return u.copy()
