"""Linear forward operators and their CSV interchange format.

Operators are dense m x d matrices. Two builders cover the bundled test
problems: a 1-D Gaussian deconvolution and a discretized Cauchy problem for
the Laplace equation (recover unknown Dirichlet data on the top edge of the
unit square from the solution trace near the bottom edge). External
operators can be ingested through the CSV format: first line "m,d", then m
lines of d comma-separated decimals.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .exceptions import DataError, DecompositionError

__all__ = [
    "LinearForwardModel",
    "apply_forward",
    "deconvolution_operator",
    "cauchy_laplace_operator",
    "repeat_rows",
    "write_operator_csv",
    "read_operator_csv",
]


@dataclass(frozen=True)
class LinearForwardModel:
    """Dense linear operator together with optional row/column labels."""

    matrix: np.ndarray
    labels: tuple[list[str], list[str]] | None = None

    def __post_init__(self):
        matrix = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        object.__setattr__(self, "matrix", matrix)
        if not np.all(np.isfinite(matrix)):
            raise ValueError("operator entries must be finite")

    @property
    def n_obs(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]


def apply_forward(model: LinearForwardModel, u: np.ndarray) -> np.ndarray:
    """Exact matrix-vector product A u."""
    u = np.asarray(u, dtype=float)
    if u.shape != (model.dim,):
        raise ValueError(
            f"input has shape {u.shape}, operator expects ({model.dim},)"
        )
    return model.matrix @ u


def deconvolution_operator(grid_size: int, kernel_sd: float) -> LinearForwardModel:
    """Square Gaussian-blur operator with rows normalized to sum 1.

    Row i holds a discretized Gaussian kernel centered at grid point i, so
    applying the operator to a constant vector returns the same constant.
    """
    if grid_size < 3:
        raise ValueError("grid_size must be >= 3")
    if kernel_sd <= 0.0:
        raise ValueError("kernel_sd must be > 0")
    idx = np.arange(grid_size, dtype=float)
    sq_dist = (idx[:, None] - idx[None, :]) ** 2
    kernel = np.exp(-0.5 * sq_dist / kernel_sd**2)
    kernel /= kernel.sum(axis=1, keepdims=True)
    return LinearForwardModel(matrix=kernel)


def cauchy_laplace_operator(grid: int) -> LinearForwardModel:
    """Severely ill-conditioned boundary-data-to-trace map for Laplace.

    The unit square is discretized on an (N+2) x (N+2) node grid with the
    5-point Laplacian. Unknown Dirichlet values u sit on the N interior
    nodes of the top edge; the other three edges are held at 0. Column j of
    the operator is the solution trace on the interior row adjacent to the
    bottom edge when u is the j-th unit vector. All N columns share a single
    Cholesky factorization of the interior system.
    """
    n = int(grid)
    if n < 4:
        raise ValueError("grid must be >= 4")
    lap = _interior_laplacian(n)
    try:
        factor = cho_factor(lap)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - SPD by construction
        raise DecompositionError("interior Laplacian factorization failed") from exc
    # RHS for the j-th basis vector: the node (top interior row, column j)
    # picks up the boundary value through its north neighbor.
    rhs = np.zeros((n * n, n))
    for j in range(n):
        rhs[_node_index(0, j, n), j] = 1.0
    solution = cho_solve(factor, rhs)
    bottom_row = np.array([_node_index(n - 1, j, n) for j in range(n)])
    return LinearForwardModel(matrix=solution[bottom_row, :])


def _node_index(row: int, col: int, n: int) -> int:
    return row * n + col


def _interior_laplacian(n: int) -> np.ndarray:
    """Dense 5-point Laplacian over the n x n interior nodes."""
    size = n * n
    lap = np.zeros((size, size))
    for i in range(n):
        for j in range(n):
            k = _node_index(i, j, n)
            lap[k, k] = 4.0
            for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                ii, jj = i + di, j + dj
                if 0 <= ii < n and 0 <= jj < n:
                    lap[k, _node_index(ii, jj, n)] = -1.0
    return lap


def repeat_rows(model: LinearForwardModel, n_obs: int) -> LinearForwardModel:
    """Stack operator rows cyclically until there are n_obs of them."""
    if n_obs < 1:
        raise ValueError("n_obs must be >= 1")
    rows = np.arange(n_obs) % model.n_obs
    return LinearForwardModel(matrix=model.matrix[rows])


def write_operator_csv(model: LinearForwardModel, path) -> None:
    """Serialize as 'm,d' header plus m rows of round-trippable decimals."""
    lines = [f"{model.n_obs},{model.dim}"]
    for row in model.matrix:
        lines.append(",".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_operator_csv(path) -> LinearForwardModel:
    """Parse the operator CSV format; malformed content raises DataError."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"operator file not found: {path}")
    lines = path.read_text().strip().splitlines()
    if not lines:
        raise DataError(f"operator file is empty: {path}")
    try:
        m, d = (int(tok) for tok in lines[0].split(","))
    except ValueError as exc:
        raise DataError(f"bad operator header {lines[0]!r} in {path}") from exc
    if m < 1 or d < 1 or len(lines) != m + 1:
        raise DataError(f"operator file {path} does not match its header")
    try:
        matrix = np.array(
            [[float(tok) for tok in line.split(",")] for line in lines[1:]]
        )
    except ValueError as exc:
        raise DataError(f"non-numeric operator entry in {path}") from exc
    if matrix.shape != (m, d):
        raise DataError(f"operator file {path} does not match its header")
    return LinearForwardModel(matrix=matrix)
