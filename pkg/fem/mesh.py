"""P1 triangular meshes, nodal vector fields and one-point quadrature."""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Dict, Optional, Union

import numpy as np
from loguru import logger
from typing_extensions import Self

from core.decompose import Decomposition, eval_null
from utils.errors import BoundaryMismatchError, MeshValidationError

MIN_TRIANGLE_AREA = 1e-14


@dataclass(frozen=True, eq=False)
class Mesh2:
    """
    Triangulation of a polygonal domain.

    Triangles must be counterclockwise with area above MIN_TRIANGLE_AREA.
    Boundary nodes are derived from edges that belong to exactly one
    triangle; an explicit ``boundary_nodes`` argument must match them.
    """
    nodes: np.ndarray
    triangles: np.ndarray
    boundary_nodes: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        triangles = np.asarray(self.triangles)
        if nodes.ndim != 2 or nodes.shape[1] != 2 or not np.all(np.isfinite(nodes)):
            raise MeshValidationError(f"nodes must be finite with shape (N, 2), got {nodes.shape}")
        if triangles.ndim != 2 or triangles.shape[1] != 3 or triangles.shape[0] == 0:
            raise MeshValidationError(f"triangles must have shape (T, 3), got {triangles.shape}")
        if not np.issubdtype(triangles.dtype, np.integer):
            if not np.all(triangles == np.round(triangles)):
                raise MeshValidationError("triangle indices must be integers")
        triangles = triangles.astype(np.int64)
        if triangles.min() < 0 or triangles.max() >= nodes.shape[0]:
            raise MeshValidationError("triangle index out of range")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "triangles", triangles)

        small = np.flatnonzero(self.areas <= MIN_TRIANGLE_AREA)
        if small.size:
            raise MeshValidationError(
                f"{small.size} triangle(s) are degenerate or clockwise, first is #{small[0]} "
                f"with signed area {self.areas[small[0]]:.3g}"
            )

        computed = self._topological_boundary()
        if self.boundary_nodes is not None:
            given = np.unique(np.asarray(self.boundary_nodes, dtype=np.int64))
            if not np.array_equal(given, computed):
                raise MeshValidationError("boundary_nodes do not match the edges used by exactly one triangle")
        object.__setattr__(self, "boundary_nodes", computed)

    def _topological_boundary(self) -> np.ndarray:
        t = self.triangles
        edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        edges = np.sort(edges, axis=1)
        unique, counts = np.unique(edges, axis=0, return_counts=True)
        if np.any(counts > 2):
            raise MeshValidationError("an edge is shared by more than two triangles")
        return np.unique(unique[counts == 1])

    @property
    def num_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]

    @cached_property
    def interior_nodes(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.num_nodes), self.boundary_nodes)

    @cached_property
    def edge_matrices(self) -> np.ndarray:
        """Per triangle the 2x2 matrix [x(v1) - x(v0), x(v2) - x(v0)]"""
        x = self.nodes[self.triangles]
        return np.stack([x[:, 1] - x[:, 0], x[:, 2] - x[:, 0]], axis=-1)

    @cached_property
    def areas(self) -> np.ndarray:
        """Signed areas; positive for counterclockwise triangles"""
        D = self.edge_matrices
        return 0.5 * (D[:, 0, 0] * D[:, 1, 1] - D[:, 0, 1] * D[:, 1, 0])

    @cached_property
    def inverse_edge_matrices(self) -> np.ndarray:
        return np.linalg.inv(self.edge_matrices)

    @cached_property
    def shape_gradients(self) -> np.ndarray:
        """Gradients of the three P1 hat functions per triangle, shape (T, 3, 2)"""
        inv = self.inverse_edge_matrices
        return np.stack([-(inv[:, 0] + inv[:, 1]), inv[:, 0], inv[:, 1]], axis=1)

    @property
    def total_area(self) -> float:
        return float(np.sum(self.areas))

    def to_json(self) -> Dict[str, Any]:
        return {
            "nodes": self.nodes.tolist(),
            "triangles": self.triangles.tolist(),
            "boundary": self.boundary_nodes.tolist(),
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> Self:
        for key in ("nodes", "triangles"):
            if key not in data:
                raise MeshValidationError(f"{key}: missing")
        return cls(np.asarray(data["nodes"]), np.asarray(data["triangles"]), data.get("boundary"))


def unit_square_mesh(m: int) -> Mesh2:
    """(m+1)^2 nodes on [0,1]^2, every cell split along its SW-NE diagonal"""
    if m < 1:
        raise MeshValidationError(f"subdivisions must be at least 1, got {m}")
    ticks = np.linspace(0.0, 1.0, m + 1)
    xs, ys = np.meshgrid(ticks, ticks)
    nodes = np.column_stack([xs.ravel(), ys.ravel()])

    triangles = []
    for j in range(m):
        for i in range(m):
            sw = j * (m + 1) + i
            se, nw = sw + 1, sw + m + 1
            ne = nw + 1
            triangles.append((sw, se, ne))
            triangles.append((sw, ne, nw))
    mesh = Mesh2(nodes, np.array(triangles))
    logger.debug(f"Built unit square mesh m={m}: {mesh.num_nodes} nodes, {mesh.num_triangles} triangles")
    return mesh


@dataclass(frozen=True, eq=False)
class VectorField:
    """Nodal values of a P1 deformation y: Omega -> R^2"""
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != 2:
            raise MeshValidationError(f"field values must have shape (N, 2), got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise MeshValidationError("field values must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, mesh: Mesh2) -> Self:
        return cls(np.zeros((mesh.num_nodes, 2)))

    @classmethod
    def from_affine(cls, mesh: Mesh2, M, c=None) -> Self:
        """Interpolant of y(x) = M x + c"""
        M = np.asarray(M, dtype=float)
        c = np.zeros(2) if c is None else np.asarray(c, dtype=float)
        return cls(mesh.nodes @ M.T + c)

    @classmethod
    def from_function(cls, mesh: Mesh2, func: Callable[[np.ndarray], np.ndarray]) -> Self:
        """Interpolant of ``func``, which maps the (N, 2) node array to (N, 2) values"""
        return cls(func(mesh.nodes))


FieldLike = Union[VectorField, np.ndarray]


def field_values(mesh: Mesh2, y: FieldLike) -> np.ndarray:
    values = y.values if isinstance(y, VectorField) else VectorField(y).values
    if values.shape[0] != mesh.num_nodes:
        raise MeshValidationError(f"field has {values.shape[0]} nodes but the mesh has {mesh.num_nodes}")
    return values


def gradients(mesh: Mesh2, y: FieldLike) -> np.ndarray:
    """Constant gradient of the P1 interpolant on each triangle, shape (T, 2, 2)"""
    v = field_values(mesh, y)[mesh.triangles]
    Dy = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=-1)
    return Dy @ mesh.inverse_edge_matrices


def integrate(mesh: Mesh2, y: FieldLike, density: Callable, batched: bool = False) -> float:
    """
    Sum over triangles of area * density(grad y).

    Exact for P1 fields. With ``batched`` the density receives the whole
    (T, 2, 2) stack once and must return T values.
    """
    G = gradients(mesh, y)
    if batched:
        values = np.asarray(density(G), dtype=float)
    else:
        values = np.array([density(g) for g in G], dtype=float)
    return float(np.sum(mesh.areas * values))


def null_lagrangian_gap(mesh: Mesh2, y1: FieldLike, y2: FieldLike, dec: Decomposition) -> float:
    """|I_L(y1) - I_L(y2)| for fields with identical boundary values"""
    v1 = field_values(mesh, y1)
    v2 = field_values(mesh, y2)
    b = mesh.boundary_nodes
    if not np.array_equal(v1[b], v2[b]):
        raise BoundaryMismatchError("fields differ on boundary nodes")
    null1 = integrate(mesh, v1, lambda G: eval_null(dec, G), batched=True)
    null2 = integrate(mesh, v2, lambda G: eval_null(dec, G), batched=True)
    return abs(null1 - null2)
