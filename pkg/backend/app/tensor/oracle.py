"""Brute-force references for checking the optimized tensor code.

Nothing here calls ``contract``: every value is a literal sum over all
m-tuples of a densified tensor.
"""
import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from app.tensor.core import SymTensorDense, Tensor, TensorError, densify

logger = logging.getLogger(__name__)

DEFAULT_RESOLUTION = 0.02
MAX_GRID_DIMENSION = 4


class GridTooLargeError(TensorError):
    """Raised when a sphere grid search is requested for n > 4."""
    pass


@dataclass(frozen=True)
class GridSearchResult:
    """Best grid point for |A x^m| on the unit sphere."""
    best_x: np.ndarray
    best_value: float
    grid_resolution: float
    points: int


def naive_contract(tensor: SymTensorDense, x: np.ndarray, r: int) -> float | np.ndarray:
    """A x^(m-r) by nested summation over every index tuple, no symmetry used."""
    if not isinstance(tensor, SymTensorDense):
        raise TensorError("naive_contract only accepts dense tensors; densify first")
    if r not in (0, 1, 2) or r > tensor.m:
        raise TensorError(f"Unsupported contraction order r={r} for m={tensor.m}")
    x = np.asarray(x, dtype=float)
    out = np.zeros((tensor.n,) * r)
    for index in itertools.product(range(tensor.n), repeat=tensor.m):
        term = tensor.entries[index]
        for k in index[r:]:
            term *= x[k]
        out[index[:r]] += term
    if r == 0:
        return float(out)
    return out


def _values_on(dense: SymTensorDense, points: np.ndarray) -> np.ndarray:
    values = np.zeros(points.shape[0])
    for index in itertools.product(range(dense.n), repeat=dense.m):
        entry = dense.entries[index]
        if entry != 0.0:
            values += entry * np.prod(points[:, list(index)], axis=1)
    return values


def _fibonacci_sphere(resolution: float) -> np.ndarray:
    count = max(2, math.ceil(4.0 * math.pi / resolution**2))
    k = np.arange(count) + 0.5
    z = 1.0 - 2.0 * k / count
    rho = np.sqrt(1.0 - z**2)
    phi = math.pi * (1.0 + math.sqrt(5.0)) * k
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def _grid_chunks(n: int, resolution: float):
    if n == 1:
        yield np.array([[1.0]])
    elif n == 2:
        theta = np.linspace(0.0, 2.0 * math.pi, math.ceil(2.0 * math.pi / resolution), endpoint=False)
        yield np.column_stack([np.cos(theta), np.sin(theta)])
    elif n == 3:
        yield _fibonacci_sphere(resolution)
    else:
        # Hyperspherical angles; one chunk per value of the first angle
        steps = math.ceil(math.pi / resolution) + 1
        psi_values = np.linspace(0.0, math.pi, steps)
        theta = np.linspace(0.0, math.pi, steps)
        phi = np.linspace(0.0, 2.0 * math.pi, math.ceil(2.0 * math.pi / resolution), endpoint=False)
        tt, pp = np.meshgrid(theta, phi, indexing="ij")
        tt, pp = tt.ravel(), pp.ravel()
        for psi in psi_values:
            s = math.sin(psi)
            yield np.column_stack([
                np.full(tt.shape, math.cos(psi)),
                s * np.cos(tt),
                s * np.sin(tt) * np.cos(pp),
                s * np.sin(tt) * np.sin(pp),
            ])


def grid_search_principal(tensor: Tensor, resolution: float = DEFAULT_RESOLUTION) -> GridSearchResult:
    """Maximize |A x^m| over a quasi-uniform sphere grid.

    Uses a circle for n = 2, a Fibonacci lattice for n = 3 and a product of
    hyperspherical angles for n = 4. Ties on |value| go to the
    lexicographically smallest point.

    Raises:
        GridTooLargeError: If n > 4.
    """
    if tensor.n > MAX_GRID_DIMENSION:
        raise GridTooLargeError(f"Grid search supports n <= {MAX_GRID_DIMENSION}, got n={tensor.n}")
    dense = densify(tensor)

    best_x: np.ndarray | None = None
    best_value = 0.0
    total = 0
    for points in _grid_chunks(dense.n, resolution):
        values = _values_on(dense, points)
        total += points.shape[0]
        magnitude = np.abs(values)
        top = magnitude.max()
        candidates = np.flatnonzero(magnitude == top)
        # lexsort sorts by the last key first, so reverse the columns
        pick = candidates[np.lexsort(points[candidates].T[::-1])[0]]
        if best_x is None or top > abs(best_value) or (
            top == abs(best_value) and tuple(points[pick]) < tuple(best_x)
        ):
            best_x, best_value = points[pick].copy(), float(values[pick])

    logger.debug("Grid search over %d points: best |value| %.6g", total, abs(best_value))
    return GridSearchResult(best_x=best_x, best_value=best_value, grid_resolution=resolution, points=total)


def fd_gradient(tensor: Tensor, x: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central differences of the homogeneous polynomial x -> A x^m."""
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    dense = densify(tensor)
    x = np.asarray(x, dtype=float)
    grad = np.zeros(dense.n)
    for i in range(dense.n):
        e = np.zeros(dense.n)
        e[i] = step
        grad[i] = (naive_contract(dense, x + e, 0) - naive_contract(dense, x - e, 0)) / (2.0 * step)
    return grad


def fd_hessian(tensor: Tensor, x: np.ndarray, step: float = 1e-4) -> np.ndarray:
    """Second-order central differences of x -> A x^m."""
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    dense = densify(tensor)
    x = np.asarray(x, dtype=float)
    n = dense.n
    basis = np.eye(n) * step

    def f(y: np.ndarray) -> float:
        return naive_contract(dense, y, 0)

    hess = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            ei, ej = basis[i], basis[j]
            value = (
                f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
            ) / (4.0 * step**2)
            hess[i, j] = hess[j, i] = value
    return hess
