"""Linear-elastic bulk: constant-strain triangles on the broken mesh.

Because every triangle owns private nodes, the assembled stiffness is
block diagonal (one 6x6 block per element); elements talk to each other
only through the interface terms added by the solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import AssemblyError
from .mesh import BrokenMesh, JumpOperator, triangle_signed_areas


@dataclass(frozen=True)
class Material:
    """Isotropic linear-elastic material for 2D analysis."""

    youngs_modulus: float
    poisson_ratio: float
    mode: str = "plane_stress"   # or "plane_strain"
    thickness: float = 1.0

    def __post_init__(self):
        if self.youngs_modulus <= 0:
            raise ValueError("youngs_modulus must be positive")
        if not (-1.0 < self.poisson_ratio < 0.5):
            raise ValueError("poisson_ratio must lie in (-1, 0.5)")
        if self.mode not in ("plane_stress", "plane_strain"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.thickness <= 0:
            raise ValueError("thickness must be positive")

    def d_matrix(self) -> np.ndarray:
        """3x3 constitutive matrix in Voigt order (xx, yy, xy)."""
        e, nu = self.youngs_modulus, self.poisson_ratio
        if self.mode == "plane_stress":
            c = e / (1.0 - nu * nu)
            return c * np.array(
                [[1.0, nu, 0.0], [nu, 1.0, 0.0], [0.0, 0.0, 0.5 * (1.0 - nu)]]
            )
        c = e / ((1.0 + nu) * (1.0 - 2.0 * nu))
        return c * np.array(
            [
                [1.0 - nu, nu, 0.0],
                [nu, 1.0 - nu, 0.0],
                [0.0, 0.0, 0.5 * (1.0 - 2.0 * nu)],
            ]
        )


@dataclass
class StiffnessMatrix:
    """Assembled global stiffness over broken-mesh DOFs (node-major)."""

    K: sp.csr_matrix
    material: Material

    @property
    def n_dof(self) -> int:
        return self.K.shape[0]

    @staticmethod
    def dof_indices(node_ids) -> np.ndarray:
        """(len, 2) DOF indices (u_x, u_y) for the given node ids."""
        node_ids = np.asarray(node_ids, dtype=np.int64)
        return np.stack([2 * node_ids, 2 * node_ids + 1], axis=1)


def element_b_matrices(nodes: np.ndarray, triangles: np.ndarray):
    """Strain-displacement matrices and areas for all CST elements.

    Returns
    -------
    B : (m, 3, 6) array
        eps = B @ u_e with u_e = (u0x, u0y, u1x, u1y, u2x, u2y) and
        eps = (eps_xx, eps_yy, gamma_xy).
    area : (m,) array
    """
    p = nodes[triangles]                      # (m, 3, 2)
    x, y = p[..., 0], p[..., 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    area = triangle_signed_areas(nodes, triangles)
    m = len(triangles)
    B = np.zeros((m, 3, 6))
    B[:, 0, 0::2] = b
    B[:, 1, 1::2] = c
    B[:, 2, 0::2] = c
    B[:, 2, 1::2] = b
    B /= (2.0 * area)[:, None, None]
    return B, area


def assemble_stiffness(mesh: BrokenMesh, mat: Material) -> StiffnessMatrix:
    """Assemble the global CST stiffness on the broken mesh.

    One-point integration, exact for constant-strain triangles. Raises
    AssemblyError for degenerate (non-positive area) elements.
    """
    area = triangle_signed_areas(mesh.nodes, mesh.triangles)
    scale = max(np.abs(mesh.nodes).max(initial=0.0), 1.0)
    if np.any(area <= 1e-14 * scale**2):
        bad = int(np.argmin(area))
        raise AssemblyError(f"degenerate triangle {bad} (area {area[bad]:g})")
    B, area = element_b_matrices(mesh.nodes, mesh.triangles)
    D = mat.d_matrix()
    ke = np.einsum("eji,jk,ekl->eil", B, D, B) * (area * mat.thickness)[:, None, None]

    dofs = np.empty((mesh.n_triangles, 6), dtype=np.int64)
    dofs[:, 0::2] = 2 * mesh.triangles
    dofs[:, 1::2] = 2 * mesh.triangles + 1
    rows = np.repeat(dofs, 6, axis=1).reshape(-1)
    cols = np.tile(dofs, (1, 6)).reshape(-1)
    K = sp.coo_matrix(
        (ke.reshape(-1), (rows, cols)), shape=(mesh.n_dof, mesh.n_dof)
    ).tocsr()
    return StiffnessMatrix(K=K, material=mat)


def elastic_energy(stiffness: StiffnessMatrix, u: np.ndarray) -> float:
    """Total elastic energy (1/2) u^T K u."""
    u = np.asarray(u, dtype=float)
    if u.shape != (stiffness.n_dof,):
        raise ValueError(
            f"displacement length {u.shape} does not match {stiffness.n_dof} DOFs"
        )
    return 0.5 * float(u @ (stiffness.K @ u))


def internal_force(stiffness: StiffnessMatrix, jump: JumpOperator, rho: float, state):
    """Gradient of the augmented Lagrangian with respect to u.

    ``K u + A^T (y + rho (A u - delta))``: zero on free DOFs at a
    converged step, the reaction on constrained DOFs.
    """
    au = jump.A @ state.u
    return stiffness.K @ state.u + jump.A.T @ (state.y + rho * (au - state.delta))


def reaction_force(
    stiffness: StiffnessMatrix,
    jump: JumpOperator,
    rho: float,
    state,
    node_set,
) -> np.ndarray:
    """Reaction force 2-vector summed over the (private) node set.

    Parameters
    ----------
    state : object with u, delta, y arrays
        A converged step solution.
    node_set : array of private node indices
        Use BrokenMesh.private_nodes_of to expand an input-node set.
    """
    node_set = np.asarray(node_set, dtype=np.int64)
    if node_set.size == 0:
        raise ValueError("reaction node set is empty")
    f = internal_force(stiffness, jump, rho, state)
    return np.array(
        [f[2 * node_set].sum(), f[2 * node_set + 1].sum()]
    )
