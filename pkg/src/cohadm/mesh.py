"""Discontinuous triangle-mesh topology.

Builds the duplicated-node discretization used by the fracture solver:
every triangle owns three private copies of its vertices, so elements are
coupled only through interface terms. Each interior edge of the input mesh
becomes an interface carrying Gauss points, a unit normal/tangent frame,
and effective areas. The jump operator maps nodal displacements to opening
2-vectors (normal, tangential) at every interface Gauss point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import MeshError

# local edge e of triangle (v0, v1, v2) runs v[e] -> v[(e+1) % 3]
_EDGE_LOCAL = np.array([[0, 1], [1, 2], [2, 0]])


def triangle_signed_areas(nodes: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Signed area of each triangle (positive for counterclockwise)."""
    p0 = nodes[triangles[:, 0]]
    p1 = nodes[triangles[:, 1]]
    p2 = nodes[triangles[:, 2]]
    return 0.5 * (
        (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
        - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1])
    )


@dataclass
class InputMesh:
    """Conforming triangulation as read from a mesh file.

    Attributes
    ----------
    nodes : (n, 2) float array
        Node coordinates.
    triangles : (m, 3) int array
        Counterclockwise node indices per triangle.
    boundary_sets : dict
        Named node-index sets used for boundary conditions and reaction
        measurement.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_sets: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.nodes = np.ascontiguousarray(self.nodes, dtype=float)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int64)
        self.boundary_sets = {
            name: np.asarray(ids, dtype=np.int64)
            for name, ids in self.boundary_sets.items()
        }

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def validate(self) -> None:
        """Check all structural invariants, raising MeshError on failure."""
        if self.nodes.ndim != 2 or self.nodes.shape[1] != 2:
            raise MeshError("nodes must be an (n, 2) array")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise MeshError("triangles must be an (m, 3) array")
        n = self.n_nodes
        if self.triangles.size and (
            self.triangles.min() < 0 or self.triangles.max() >= n
        ):
            bad = int(np.argmax((self.triangles < 0) | (self.triangles >= n)))
            raise MeshError(f"triangle {bad // 3} references a node out of range")
        areas = triangle_signed_areas(self.nodes, self.triangles)
        scale = max(np.abs(self.nodes).max(initial=0.0), 1.0)
        if np.any(areas <= 1e-14 * scale**2):
            bad = int(np.argmin(areas))
            raise MeshError(
                f"triangle {bad} has non-positive signed area {areas[bad]:g} "
                "(nodes must be counterclockwise and not collinear)"
            )
        for name, ids in self.boundary_sets.items():
            if ids.size and (ids.min() < 0 or ids.max() >= n):
                raise MeshError(f"boundary set '{name}' references a node out of range")
        _edge_table(self.triangles)  # raises on non-manifold edges
        if not _edge_connected(self.triangles):
            raise MeshError("mesh is not edge-connected")


@dataclass(frozen=True)
class InterfaceEdge:
    """One interior edge of the input mesh, shared by two triangles.

    The minus side is the triangle with the lower id; the normal points
    from the minus side to the plus side and is fixed at the reference
    configuration. The tangent is the normal rotated by +90 degrees.
    """

    minus_tri: int
    minus_edge: int
    plus_tri: int
    plus_edge: int
    normal: np.ndarray
    tangent: np.ndarray
    length: float


@dataclass
class BrokenMesh:
    """Duplicated-node mesh: triangle t owns private nodes 3t, 3t+1, 3t+2."""

    nodes: np.ndarray          # (3m, 2) private node coordinates
    triangles: np.ndarray      # (m, 3) private node indices
    origin_of: np.ndarray      # (3m,) private node -> input node
    interfaces: list[InterfaceEdge]
    input_mesh: InputMesh

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_dof(self) -> int:
        return 2 * len(self.nodes)

    def private_nodes_of(self, input_nodes) -> np.ndarray:
        """All private copies of the given input node ids, sorted."""
        mask = np.isin(self.origin_of, np.asarray(input_nodes, dtype=np.int64))
        return np.flatnonzero(mask)

    def dofs_of(self, input_nodes, component: str) -> np.ndarray:
        """DOF indices ('x', 'y' or 'xy') of all private copies of the nodes."""
        priv = self.private_nodes_of(input_nodes)
        comps = {"x": [0], "y": [1], "xy": [0, 1]}[component]
        return np.sort(np.concatenate([2 * priv + c for c in comps]))


def _edge_table(triangles: np.ndarray) -> dict:
    """Map sorted input-node pair -> list of (triangle, local edge).

    Raises MeshError if any edge is shared by more than two triangles.
    """
    table: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for t, tri in enumerate(triangles):
        for e in range(3):
            a, b = tri[_EDGE_LOCAL[e]]
            key = (int(min(a, b)), int(max(a, b)))
            owners = table.setdefault(key, [])
            owners.append((t, e))
            if len(owners) > 2:
                raise MeshError(
                    f"non-manifold edge {key}: shared by more than two triangles"
                )
    return table


def _edge_connected(triangles: np.ndarray) -> bool:
    """True when every triangle is reachable through shared edges."""
    m = len(triangles)
    if m <= 1:
        return True
    table = _edge_table(triangles)
    adj: list[list[int]] = [[] for _ in range(m)]
    for owners in table.values():
        if len(owners) == 2:
            (t0, _), (t1, _) = owners
            adj[t0].append(t1)
            adj[t1].append(t0)
    seen = np.zeros(m, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        t = stack.pop()
        for u in adj[t]:
            if not seen[u]:
                seen[u] = True
                stack.append(u)
    return bool(seen.all())


def break_mesh(mesh: InputMesh) -> BrokenMesh:
    """Duplicate nodes per triangle and enumerate interface edges.

    Every interior edge of the input mesh (shared by exactly two
    triangles) yields one InterfaceEdge; boundary edges yield none.
    Orientation is deterministic: the lower triangle id is the minus side
    and the normal points minus -> plus.

    Raises
    ------
    MeshError
        If the input mesh violates its invariants or has a non-manifold
        edge.
    """
    mesh.validate()
    m = mesh.n_triangles
    flat = mesh.triangles.reshape(-1)
    nodes = mesh.nodes[flat].copy()
    triangles = np.arange(3 * m, dtype=np.int64).reshape(m, 3)
    origin_of = flat.copy()

    interfaces = []
    for owners in _edge_table(mesh.triangles).values():
        if len(owners) != 2:
            continue
        (t0, e0), (t1, e1) = owners
        if t0 > t1:
            (t0, e0), (t1, e1) = (t1, e1), (t0, e0)
        a, b = mesh.triangles[t0, _EDGE_LOCAL[e0]]
        pa, pb = mesh.nodes[a], mesh.nodes[b]
        vec = pb - pa
        length = float(np.hypot(*vec))
        tangent_dir = vec / length
        # outward normal of the CCW minus triangle's edge a -> b
        normal = np.array([tangent_dir[1], -tangent_dir[0]])
        tangent = np.array([-normal[1], normal[0]])
        interfaces.append(
            InterfaceEdge(
                minus_tri=int(t0),
                minus_edge=int(e0),
                plus_tri=int(t1),
                plus_edge=int(e1),
                normal=normal,
                tangent=tangent,
                length=length,
            )
        )
    # deterministic interface order regardless of dict iteration details
    interfaces.sort(key=lambda ie: (ie.minus_tri, ie.minus_edge))
    return BrokenMesh(
        nodes=nodes,
        triangles=triangles,
        origin_of=origin_of,
        interfaces=interfaces,
        input_mesh=mesh,
    )


def gauss_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre points and weights on [0, 1] (weights sum to 1)."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@dataclass
class JumpOperator:
    """Sparse map from nodal displacements to interface openings.

    ``A`` has one row pair per interface Gauss point: row 2i is the
    normal opening and row 2i+1 the tangential opening at point i.
    Applying A to any displacement field that is continuous across all
    interfaces gives zero.

    Attributes
    ----------
    A : csr_matrix, shape (2 * n_points, n_dof)
    areas : (n_points,) float array
        Effective area per Gauss point (quadrature weight x edge length
        x thickness).
    points : (n_points, 2) float array
        Gauss point positions in the reference configuration.
    edge_index : (n_points,) int array
        Interface edge owning each Gauss point.
    """

    A: sp.csr_matrix
    areas: np.ndarray
    points: np.ndarray
    edge_index: np.ndarray
    thickness: float
    gauss_per_edge: int

    @property
    def n_points(self) -> int:
        return len(self.areas)

    @property
    def n_dof(self) -> int:
        return self.A.shape[1]

    def rows(self, i: int) -> sp.csr_matrix:
        """The 2 x n_dof block mapping u to (delta_n, delta_s) at point i."""
        return self.A[2 * i : 2 * i + 2]

    def point_normals(self) -> np.ndarray:
        """(n_points, 2) unit normals, one per Gauss point."""
        if not self._edges:
            return np.zeros((0, 2))
        normals = np.array([ie.normal for ie in self._edges])
        return normals[self.edge_index]

    _edges: list = field(default_factory=list, repr=False)


def build_jump_operator(
    mesh: BrokenMesh, gauss_per_edge: int = 2, thickness: float = 1.0
) -> JumpOperator:
    """Assemble the jump operator and interface quadrature data.

    For a nodal field u, row pair i of the result gives the difference
    (plus side minus minus side) of the interpolated displacement at
    Gauss point i, rotated into the (normal, tangent) frame of its edge.

    Parameters
    ----------
    mesh : BrokenMesh
    gauss_per_edge : int
        Quadrature points per interface edge (>= 1). Two points integrate
        the linear jump fields of 3-node triangles exactly.
    thickness : float
        Out-of-plane thickness entering the effective areas.
    """
    if gauss_per_edge < 1:
        raise ValueError("gauss_per_edge must be >= 1")
    if thickness <= 0:
        raise ValueError("thickness must be positive")
    edges = mesh.interfaces
    n_edges = len(edges)
    n_points = n_edges * gauss_per_edge
    n_dof = mesh.n_dof
    s, w = gauss_rule(gauss_per_edge)

    if n_edges == 0:
        A = sp.csr_matrix((0, n_dof))
        return JumpOperator(
            A=A,
            areas=np.zeros(0),
            points=np.zeros((0, 2)),
            edge_index=np.zeros(0, dtype=np.int64),
            thickness=thickness,
            gauss_per_edge=gauss_per_edge,
            _edges=list(edges),
        )

    minus_tri = np.array([ie.minus_tri for ie in edges])
    minus_edge = np.array([ie.minus_edge for ie in edges])
    plus_tri = np.array([ie.plus_tri for ie in edges])
    plus_edge = np.array([ie.plus_edge for ie in edges])
    normals = np.array([ie.normal for ie in edges])
    tangents = np.array([ie.tangent for ie in edges])
    lengths = np.array([ie.length for ie in edges])

    # private node pairs bounding each side, aligned so that index 0 sits
    # at the same geometric endpoint on both sides
    m_nodes = mesh.triangles[minus_tri[:, None], _EDGE_LOCAL[minus_edge]]   # (E, 2)
    p_nodes = mesh.triangles[plus_tri[:, None], _EDGE_LOCAL[plus_edge]]    # (E, 2)
    swap = mesh.origin_of[p_nodes[:, 0]] != mesh.origin_of[m_nodes[:, 0]]
    p_nodes[swap] = p_nodes[swap][:, ::-1]
    if np.any(mesh.origin_of[p_nodes] != mesh.origin_of[m_nodes]):
        raise MeshError("interface sides do not reference the same segment")

    P = mesh.nodes[m_nodes[:, 0]]
    Q = mesh.nodes[m_nodes[:, 1]]
    points = P[:, None, :] + s[None, :, None] * (Q - P)[:, None, :]  # (E, g, 2)
    areas = (w[None, :] * lengths[:, None] * thickness).reshape(-1)

    # per Gauss point: 4 contributing nodes with signed shape weights
    shape = np.stack([1.0 - s, s], axis=1)                 # (g, 2)
    cols_nodes = np.concatenate([p_nodes, m_nodes], axis=1)  # (E, 4)
    signs = np.array([1.0, 1.0, -1.0, -1.0])
    weights = np.concatenate([shape, shape], axis=1) * signs  # (g, 4)

    # rows: (E, g, 2, 4, 2) -> flattened COO triplets
    gp_index = (
        np.arange(n_edges)[:, None] * gauss_per_edge + np.arange(gauss_per_edge)
    )  # (E, g)
    frame = np.stack([normals, tangents], axis=1)          # (E, 2, 2)
    data = (
        weights[None, :, None, :, None] * frame[:, None, :, None, :]
    )  # (E, g, row_comp, node, xy)
    rows = np.broadcast_to(
        (2 * gp_index)[:, :, None, None, None] + np.arange(2)[None, None, :, None, None],
        data.shape,
    )
    cols = np.broadcast_to(
        (2 * cols_nodes)[:, None, None, :, None] + np.arange(2)[None, None, None, None, :],
        data.shape,
    )
    A = sp.coo_matrix(
        (data.reshape(-1), (rows.reshape(-1), cols.reshape(-1))),
        shape=(2 * n_points, n_dof),
    ).tocsr()

    return JumpOperator(
        A=A,
        areas=areas,
        points=points.reshape(-1, 2),
        edge_index=np.repeat(np.arange(n_edges, dtype=np.int64), gauss_per_edge),
        thickness=thickness,
        gauss_per_edge=gauss_per_edge,
        _edges=list(edges),
    )
