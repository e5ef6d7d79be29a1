"""1-D computational grids for intervals and radially symmetric balls.

A ball in N dimensions is reduced to its radial coordinate; every integral
carries the weight r^(N-1) together with the surface measure of the unit
(N-1)-sphere, so norms computed here are genuine integrals over the ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidMesh, MeshMismatch, NumericError

INTERVAL = "interval"
RADIAL_BALL = "radial_ball"


def unit_sphere_surface(dimension: int) -> float:
    """Surface measure of the unit (dimension-1)-sphere (2 for dimension 1)."""
    return 2.0 * math.pi ** (dimension / 2.0) / math.gamma(dimension / 2.0)


@dataclass(frozen=True)
class Mesh:
    """Uniform 1-D grid, possibly radially weighted.

    ``nodes`` runs from 0 to ``extent``.  For an interval both endpoints are
    Dirichlet nodes; for a radial ball only the outer node is, and the origin
    carries a zero-flux symmetry condition.  ``face_weights`` holds r^(N-1)
    at cell midpoints (the control-volume faces) and ``node_volumes`` the
    exact integral of r^(N-1) over each node's control volume.
    """

    kind: str
    dimension: int
    extent: float
    nodes: np.ndarray
    cell_widths: np.ndarray
    radial_weight: np.ndarray
    volume_constant: float
    face_weights: np.ndarray = field(repr=False)
    node_volumes: np.ndarray = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return self.nodes.size

    @property
    def n_cells(self) -> int:
        return self.nodes.size - 1

    @property
    def left_is_dirichlet(self) -> bool:
        return self.kind == INTERVAL

    def dirichlet_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_nodes, dtype=bool)
        mask[-1] = True
        if self.left_is_dirichlet:
            mask[0] = True
        return mask

    def node_quadrature_weights(self) -> np.ndarray:
        """Trapezoidal lumped weights w_i * h_i (without the volume constant)."""
        h = self.cell_widths
        lumped = np.zeros(self.n_nodes)
        lumped[:-1] += 0.5 * h
        lumped[1:] += 0.5 * h
        return lumped * self.radial_weight

    def matches(self, other: "Mesh") -> bool:
        return (
            self.kind == other.kind
            and self.dimension == other.dimension
            and self.n_nodes == other.n_nodes
            and self.extent == other.extent
        )


def _build(kind: str, dimension: int, n_cells: int, extent: float) -> Mesh:
    if n_cells < 2:
        raise InvalidMesh(f"need at least 2 cells, got {n_cells}")
    if dimension < 1:
        raise InvalidMesh(f"dimension must be >= 1, got {dimension}")
    if not (extent > 0.0 and math.isfinite(extent)):
        raise InvalidMesh(f"extent must be a positive finite real, got {extent}")

    nodes = np.linspace(0.0, extent, n_cells + 1)
    h = np.diff(nodes)
    exponent = dimension - 1
    weight = nodes**exponent if exponent else np.ones_like(nodes)
    midpoints = 0.5 * (nodes[:-1] + nodes[1:])
    face_w = midpoints**exponent if exponent else np.ones_like(midpoints)

    # control volume of node i spans [midpoint(i-1), midpoint(i)], clipped at
    # the domain ends; integral of r^(N-1) over it is (b^N - a^N)/N exactly
    left_edges = np.concatenate(([nodes[0]], midpoints))
    right_edges = np.concatenate((midpoints, [nodes[-1]]))
    volumes = (right_edges**dimension - left_edges**dimension) / dimension

    vol_const = 1.0 if kind == INTERVAL else unit_sphere_surface(dimension)

    for arr in (nodes, h, weight, face_w, volumes):
        arr.setflags(write=False)
    return Mesh(
        kind=kind,
        dimension=dimension,
        extent=float(extent),
        nodes=nodes,
        cell_widths=h,
        radial_weight=weight,
        volume_constant=vol_const,
        face_weights=face_w,
        node_volumes=volumes,
    )


def build_interval_mesh(n_cells: int, length: float) -> Mesh:
    """Uniform grid on (0, length) with Dirichlet nodes at both ends."""
    return _build(INTERVAL, 1, n_cells, length)


def build_radial_mesh(dimension: int, n_cells: int, radius: float) -> Mesh:
    """Uniform radial grid on [0, radius] for a ball in the given dimension."""
    return _build(RADIAL_BALL, dimension, n_cells, radius)


@dataclass(frozen=True)
class GridFunction:
    """Nodal real values on a mesh."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.mesh.n_nodes,):
            raise MeshMismatch(
                f"expected {self.mesh.n_nodes} nodal values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise NumericError("grid function contains non-finite values")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, mesh: Mesh, fn) -> "GridFunction":
        return cls(mesh, np.asarray([fn(x) for x in mesh.nodes], dtype=float))

    @classmethod
    def constant(cls, mesh: Mesh, c: float) -> "GridFunction":
        return cls(mesh, np.full(mesh.n_nodes, float(c)))

    @classmethod
    def zeros(cls, mesh: Mesh) -> "GridFunction":
        return cls(mesh, np.zeros(mesh.n_nodes))

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.mesh, values)


def _check_on(mesh: Mesh, g: GridFunction):
    if g.mesh is not mesh and not mesh.matches(g.mesh):
        raise MeshMismatch("grid function lives on a different mesh")


def integrate(mesh: Mesh, g: GridFunction) -> float:
    """Weighted trapezoidal integral of g over the domain.

    Exact for piecewise-linear g * radial_weight; multiplied by the surface
    constant so the result is the full volume integral for balls.
    """
    _check_on(mesh, g)
    gw = g.values * mesh.radial_weight
    return mesh.volume_constant * float(
        np.sum(0.5 * mesh.cell_widths * (gw[:-1] + gw[1:]))
    )


def integrate_cells(mesh: Mesh, cell_values: np.ndarray) -> float:
    """Integral of a piecewise-constant (per-cell) quantity, midpoint weighted."""
    cell_values = np.asarray(cell_values, dtype=float)
    if cell_values.shape != (mesh.n_cells,):
        raise MeshMismatch(
            f"expected {mesh.n_cells} cell values, got shape {cell_values.shape}"
        )
    return mesh.volume_constant * float(
        np.sum(cell_values * mesh.face_weights * mesh.cell_widths)
    )


def cell_gradient(mesh: Mesh, u: GridFunction) -> np.ndarray:
    """Forward-difference slope per cell: (u[i+1] - u[i]) / h[i]."""
    _check_on(mesh, u)
    return np.diff(u.values) / mesh.cell_widths
