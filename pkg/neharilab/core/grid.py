"""
Tensor grids on box domains with homogeneous Dirichlet data.

Only interior nodes are stored; the boundary condition is structural. The
stiffness form is the 2N+1-point Laplacian stencil scaled by the cell volume
h^N, so that q(u, u) is the discrete Dirichlet energy, and integrals use the
nodal rule sum(v_i) * h^N.
"""

from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from neharilab.errors import GridError, GridMismatchError
from neharilab.utils.logging import setup_logger

# Setup logger
logger = setup_logger(__name__)

ArrayLike = Union[np.ndarray, Sequence[float]]


@dataclass(frozen=True)
class Grid:
    """
    Uniform tensor grid of interior nodes on a box, lexicographic ordering
    (last axis fastest).
    """

    dim: int
    extents: Tuple[Tuple[float, float], ...]
    counts: Tuple[int, ...]
    spacing: Tuple[float, ...]

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.counts

    @property
    def cell_volume(self) -> float:
        """h^N, the nodal quadrature weight."""
        return float(np.prod(self.spacing))

    @property
    def measure(self) -> float:
        """Lebesgue measure |Omega| of the box."""
        return float(np.prod([b - a for a, b in self.extents]))

    def axis_nodes(self, axis: int) -> np.ndarray:
        a, _ = self.extents[axis]
        h = self.spacing[axis]
        return a + h * np.arange(1, self.counts[axis] + 1)

    def coordinates(self) -> np.ndarray:
        """All node coordinates, shape (size, dim), in index order."""
        axes = [self.axis_nodes(k) for k in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def node_index(self, multi_index: Sequence[int]) -> int:
        if len(multi_index) != self.dim:
            raise GridError(f"expected {self.dim} indices, got {len(multi_index)}")
        return int(np.ravel_multi_index(tuple(multi_index), self.counts))

    def node_multi_index(self, index: int) -> Tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(index, self.counts))

    def node_coordinate(self, index: int) -> np.ndarray:
        multi = self.node_multi_index(index)
        return np.array([self.extents[k][0] + self.spacing[k] * (multi[k] + 1) for k in range(self.dim)])

    def sample_nodes(self, k: int) -> np.ndarray:
        """Indices of k evenly spread nodes (all nodes if k >= size)."""
        if k >= self.size:
            return np.arange(self.size)
        return np.unique(np.linspace(0, self.size - 1, k).round().astype(int))

    def sample(self, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """Evaluate a vectorized coordinate function at every node."""
        values = np.asarray(fn(self.coordinates()), dtype=float)
        return np.broadcast_to(values, (self.size,)).copy()

    def values(self, u: Union["GridField", ArrayLike]) -> np.ndarray:
        """Return the nodal array of u, checking it belongs to this grid."""
        if isinstance(u, GridField):
            if u.grid != self:
                raise GridMismatchError("field lives on a different grid")
            return u.values
        arr = np.asarray(u, dtype=float)
        if arr.shape != (self.size,):
            raise GridMismatchError(f"expected {self.size} nodal values, got shape {arr.shape}")
        return arr

    def integrate(self, vals: Union["GridField", ArrayLike]) -> float:
        """Nodal rule: sum(vals) * h^N."""
        return float(np.sum(self.values(vals)) * self.cell_volume)

    def weighted_l2(self, theta: Union["GridField", ArrayLike], u: Union["GridField", ArrayLike]) -> float:
        """Integral of theta * u^2."""
        w = self.values(theta)
        v = self.values(u)
        return self.integrate(w * v * v)

    def lp_norm(self, u: Union["GridField", ArrayLike], p: float) -> float:
        """(integral |u|^p)^(1/p); p = inf gives the nodal maximum of |u|."""
        if not p >= 1:
            raise GridError(f"lp_norm needs p >= 1, got {p}")
        v = np.abs(self.values(u))
        if np.isinf(p):
            return float(v.max()) if v.size else 0.0
        return float(self.integrate(v**p) ** (1.0 / p))


def build_grid(dim: int, extents: Sequence[Sequence[float]], counts: Sequence[int]) -> Grid:
    """
    Build a box grid.

    Args:
        dim: Space dimension N in {1, 2, 3}.
        extents: Per-axis intervals (a_i, b_i).
        counts: Per-axis interior node counts n_i >= 3.

    Returns:
        The grid, with spacing h_i = (b_i - a_i) / (n_i + 1).
    """
    if dim not in (1, 2, 3):
        raise GridError(f"dim must be 1, 2 or 3, got {dim}")
    if len(extents) != dim or len(counts) != dim:
        raise GridError(
            f"dimension mismatch: dim={dim}, {len(extents)} extents, {len(counts)} counts"
        )
    ext = []
    for axis, interval in enumerate(extents):
        if len(interval) != 2:
            raise GridError(f"extents[{axis}] must be an interval (a, b)")
        a, b = float(interval[0]), float(interval[1])
        if not b > a:
            raise GridError(f"extents[{axis}]: need b > a, got ({a}, {b})")
        ext.append((a, b))
    cnt = []
    for axis, n in enumerate(counts):
        if int(n) != n or n < 3:
            raise GridError(f"counts[{axis}] must be an integer >= 3, got {n}")
        cnt.append(int(n))
    spacing = tuple((b - a) / (n + 1) for (a, b), n in zip(ext, cnt))
    grid = Grid(dim=dim, extents=tuple(ext), counts=tuple(cnt), spacing=spacing)
    logger.debug(f"Built grid dim={dim} counts={cnt} spacing={spacing}")
    return grid


@dataclass(frozen=True)
class GridField:
    """Nodal values of a function vanishing on the boundary."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.shape != (self.grid.size,):
            raise GridMismatchError(f"expected {self.grid.size} values, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise GridError("field values must be finite")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True)
class StiffnessForm:
    """
    Discrete Dirichlet energy q(u, v) = u^T K v with K symmetric positive definite.
    """

    grid: Grid
    matrix: sparse.csc_matrix
    scale: float
    _lu: object = field(repr=False, compare=False)

    def apply(self, u: ArrayLike) -> np.ndarray:
        return self.matrix @ np.asarray(u, dtype=float)

    def q(self, u: ArrayLike, v: Optional[ArrayLike] = None) -> float:
        u = np.asarray(u, dtype=float)
        v = u if v is None else np.asarray(v, dtype=float)
        return float(u @ (self.matrix @ v))

    def norm(self, u: ArrayLike) -> float:
        return float(np.sqrt(max(self.q(u), 0.0)))

    def solve(self, load: ArrayLike) -> np.ndarray:
        """Riesz representer: w with q(w, v) = load . v for all v."""
        return self._lu.solve(np.asarray(load, dtype=float))

    def dual_norm(self, load: ArrayLike) -> float:
        """H^-1 norm of the functional v -> load . v (one stiffness solve)."""
        load = np.asarray(load, dtype=float)
        return float(np.sqrt(max(load @ self.solve(load), 0.0)))


def _second_difference(n: int, h: float) -> sparse.csc_matrix:
    ones = np.ones(n)
    return sparse.diags([-ones[1:], 2.0 * ones, -ones[1:]], [-1, 0, 1], format="csc") / (h * h)


def assemble_stiffness(grid: Grid) -> StiffnessForm:
    """
    Assemble the Dirichlet Laplacian stencil scaled by h^N.

    q(u, u) = sum over stencil links of ((u_i - u_j) / h_axis)^2 * h^N,
    links to the (zero) boundary included.
    """
    blocks = []
    for axis in range(grid.dim):
        factors = [
            _second_difference(n, grid.spacing[axis]) if k == axis else sparse.identity(n, format="csc")
            for k, n in enumerate(grid.counts)
        ]
        blocks.append(reduce(lambda a, b: sparse.kron(a, b, format="csc"), factors))
    laplacian = reduce(lambda a, b: a + b, blocks)
    matrix = sparse.csc_matrix(laplacian * grid.cell_volume)
    lu = splu(matrix)
    logger.debug(f"Assembled stiffness form with {matrix.nnz} nonzeros")
    return StiffnessForm(grid=grid, matrix=matrix, scale=grid.cell_volume, _lu=lu)


def support_measure(grid: Grid, u: ArrayLike, threshold: float = 1e-12) -> float:
    """|[u != 0]| as node count above threshold times h^N."""
    v = grid.values(u)
    return float(np.count_nonzero(np.abs(v) > threshold) * grid.cell_volume)
