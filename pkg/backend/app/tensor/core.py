"""Symmetric tensor representations and the m-r tensor-vector contraction.

Three representations share one contraction API:

- ``SymTensorDense``: fully materialized array, the brute-force reference.
- ``SymTensorSparse``: one canonical (non-decreasing) index tuple per
  permutation orbit, the scalable representation for noise terms.
- ``RankOnePlusNoise``: ``lam * a^(x)m + noise`` kept in structured form.

Indices are 0-based in memory; the text file format in ``app.tensor.io``
is 1-based. All objects are immutable after construction.
"""
import itertools
import logging
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.special import comb

from app.settings import get_settings

logger = logging.getLogger(__name__)

# Exhaustive symmetry validation is skipped above this many entries
SYMMETRY_CHECK_LIMIT = 10**6
UNIT_A_TOL = 1e-12


class TensorError(ValueError):
    """Base exception for tensor construction and contraction errors."""
    pass


class DimensionMismatchError(TensorError):
    """Raised when vector or tensor dimensions do not agree."""
    pass


class ModeError(TensorError):
    """Raised when a contraction order is not supported for the tensor."""
    pass


class SymmetryError(TensorError):
    """Raised when data that must be symmetric is not."""
    pass


class DensifyBudgetError(TensorError):
    """Raised when materializing a tensor would exceed the entry budget."""
    pass


class NotUnitVectorError(TensorError):
    """Raised when a unit vector is required but the input is not normalized."""
    pass


# r = 0 gives a float, r = 1 a vector, r = 2 a symmetric matrix
LowModeResult = float | np.ndarray


def multinomial(index: tuple[int, ...] | list[int]) -> int:
    """Number of distinct orderings of a multiset of indices."""
    counts = Counter(index)
    total = math.factorial(len(index))
    for c in counts.values():
        total //= math.factorial(c)
    return total


def orbit_size(index: tuple[int, ...]) -> int:
    """Size of the permutation orbit of an m-tuple (m! / prod of c_i!)."""
    return multinomial(index)


def canonical_index(index: tuple[int, ...] | list[int]) -> tuple[int, ...]:
    """The sorted representative of an index tuple's permutation orbit."""
    return tuple(sorted(int(i) for i in index))


@dataclass(frozen=True)
class _ContractionPlan:
    """Precomputed expansion of canonical terms for one contraction order r.

    Each row is one ordered choice of the r free indices drawn from a
    canonical term; ``coef`` already carries the term value times the number
    of index tuples that place the remaining indices in the contracted slots.
    """
    free: np.ndarray
    coef: np.ndarray
    rest: np.ndarray


def _build_plan(indices: np.ndarray, values: np.ndarray, m: int, r: int) -> _ContractionPlan:
    free_rows: list[tuple[int, ...]] = []
    coefs: list[float] = []
    rests: list[list[int]] = []
    for idx, value in zip(indices.tolist(), values.tolist()):
        for free in sorted(set(itertools.permutations(idx, r))):
            rest = list(idx)
            for j in free:
                rest.remove(j)
            free_rows.append(free)
            coefs.append(value * multinomial(rest))
            rests.append(rest)
    return _ContractionPlan(
        free=np.array(free_rows, dtype=np.int64).reshape(len(free_rows), r),
        coef=np.array(coefs, dtype=float),
        rest=np.array(rests, dtype=np.int64).reshape(len(rests), m - r),
    )


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SymTensorDense:
    """A fully materialized symmetric tensor with m modes of dimension n."""
    entries: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.entries, dtype=float)
        if arr.ndim < 2:
            raise ModeError(f"A symmetric tensor needs at least 2 modes, got {arr.ndim}")
        n = arr.shape[0]
        if n < 1 or any(s != n for s in arr.shape):
            raise DimensionMismatchError(f"All modes must share one dimension, got shape {arr.shape}")
        if arr.size <= SYMMETRY_CHECK_LIMIT:
            # Adjacent transpositions generate the full permutation group
            scale = max(1.0, float(np.max(np.abs(arr))))
            for axis in range(arr.ndim - 1):
                swapped = np.swapaxes(arr, axis, axis + 1)
                if not np.allclose(arr, swapped, rtol=0.0, atol=1e-12 * scale):
                    raise SymmetryError(
                        f"Entries are not invariant under swapping modes {axis + 1} and {axis + 2}"
                    )
        object.__setattr__(self, "entries", _freeze(arr))

    @property
    def m(self) -> int:
        return self.entries.ndim

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __neg__(self) -> "SymTensorDense":
        return scale(self, -1.0)


@dataclass(frozen=True, eq=False)
class SymTensorSparse:
    """Canonical-index coordinate form of a symmetric tensor.

    ``indices`` is a (k, m) integer array whose rows are non-decreasing and
    unique; ``values`` holds the entry shared by every permutation of a row.
    """
    m: int
    n: int
    indices: np.ndarray
    values: np.ndarray
    _plans: dict[int, _ContractionPlan] = field(init=False, repr=False)
    _orbits: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.m < 2:
            raise ModeError(f"A symmetric tensor needs at least 2 modes, got {self.m}")
        if self.n < 1:
            raise DimensionMismatchError(f"Dimension must be positive, got {self.n}")
        indices = np.array(self.indices, dtype=np.int64).reshape(-1, self.m)
        values = np.array(self.values, dtype=float).reshape(-1)
        if indices.shape[0] != values.shape[0]:
            raise DimensionMismatchError(
                f"Got {indices.shape[0]} index tuples but {values.shape[0]} values"
            )
        if indices.size and (indices.min() < 0 or indices.max() >= self.n):
            raise DimensionMismatchError(f"Index out of range for dimension {self.n}")
        if np.any(np.diff(indices, axis=1) < 0):
            raise SymmetryError("Index tuples must be non-decreasing (canonical form)")
        if len({tuple(row) for row in indices.tolist()}) != indices.shape[0]:
            raise SymmetryError("Duplicate canonical index tuples")

        object.__setattr__(self, "indices", _freeze(indices))
        object.__setattr__(self, "values", _freeze(values))
        orbits = np.array([orbit_size(tuple(row)) for row in indices.tolist()], dtype=float)
        object.__setattr__(self, "_orbits", _freeze(orbits))
        # Contraction plans are built on first use of each order r
        object.__setattr__(self, "_plans", {})

    @classmethod
    def from_terms(
        cls,
        m: int,
        n: int,
        terms: list[tuple[tuple[int, ...], float]],
        merge: str = "error",
    ) -> "SymTensorSparse":
        """Build from (index tuple, value) pairs, canonicalizing each tuple.

        Args:
            m: Mode count.
            n: Dimension.
            terms: 0-based index tuples with their values, in any order.
            merge: What to do when two tuples share an orbit: "error",
                "first" (keep the first value) or "sum".

        Returns:
            The sparse tensor.

        Raises:
            SymmetryError: If merge is "error" and a duplicate orbit appears.
        """
        merged: dict[tuple[int, ...], float] = {}
        for index, value in terms:
            if len(index) != m:
                raise DimensionMismatchError(f"Index {tuple(index)} does not have {m} entries")
            key = canonical_index(index)
            if key in merged:
                if merge == "first":
                    continue
                if merge == "sum":
                    merged[key] += float(value)
                    continue
                raise SymmetryError(f"Duplicate canonical index {key}")
            merged[key] = float(value)
        keys = sorted(merged)
        return cls(
            m=m,
            n=n,
            indices=np.array(keys, dtype=np.int64).reshape(len(keys), m),
            values=np.array([merged[k] for k in keys], dtype=float),
        )

    @classmethod
    def zeros(cls, m: int, n: int) -> "SymTensorSparse":
        return cls(m=m, n=n, indices=np.zeros((0, m), dtype=np.int64), values=np.zeros(0))

    @property
    def nnz(self) -> int:
        return int(self.values.shape[0])

    def terms(self) -> list[tuple[tuple[int, ...], float]]:
        """Canonical (index, value) pairs in storage order."""
        return [(tuple(row), float(v)) for row, v in zip(self.indices.tolist(), self.values.tolist())]

    def abs_entry_sum(self) -> float:
        """Sum of |entry| over all m-tuples, each term weighted by its orbit size."""
        return float(np.sum(self._orbits * np.abs(self.values)))

    def _contract(self, x: np.ndarray, r: int) -> LowModeResult:
        plan = self._plans.get(r)
        if plan is None:
            plan = self._plans.setdefault(r, _build_plan(self.indices, self.values, self.m, r))
        weights = plan.coef * np.prod(x[plan.rest], axis=1)
        if r == 0:
            return float(np.sum(weights))
        if r == 1:
            return np.bincount(plan.free[:, 0], weights=weights, minlength=self.n).astype(float)
        out = np.zeros((self.n, self.n))
        np.add.at(out, (plan.free[:, 0], plan.free[:, 1]), weights)
        return 0.5 * (out + out.T)

    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __neg__(self) -> "SymTensorSparse":
        return scale(self, -1.0)


@dataclass(frozen=True, eq=False)
class RankOnePlusNoise:
    """Structured tensor lam * a^(x)m + noise, never materialized."""
    lam: float
    a: np.ndarray
    noise: SymTensorSparse

    def __post_init__(self) -> None:
        a = np.array(self.a, dtype=float).reshape(-1)
        if a.shape[0] != self.noise.n:
            raise DimensionMismatchError(
                f"Planted vector has dimension {a.shape[0]}, noise has {self.noise.n}"
            )
        if abs(np.linalg.norm(a) - 1.0) > UNIT_A_TOL:
            raise NotUnitVectorError(f"Planted vector must be unit length, got norm {np.linalg.norm(a)!r}")
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "a", _freeze(a))

    @property
    def m(self) -> int:
        return self.noise.m

    @property
    def n(self) -> int:
        return self.noise.n

    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __neg__(self) -> "RankOnePlusNoise":
        return scale(self, -1.0)


Tensor = SymTensorDense | SymTensorSparse | RankOnePlusNoise


def _as_vector(x: np.ndarray, n: int) -> np.ndarray:
    vec = np.asarray(x, dtype=float)
    if vec.ndim != 1 or vec.shape[0] != n:
        raise DimensionMismatchError(f"Expected a vector of dimension {n}, got shape {vec.shape}")
    return vec


def _check_order(m: int, r: int) -> None:
    if r not in (0, 1, 2):
        raise ModeError(f"Contraction order r must be 0, 1 or 2, got {r}")
    if r > m:
        raise ModeError(f"Contraction order r={r} exceeds mode count m={m}")


def contract(tensor: Tensor, x: np.ndarray, r: int) -> LowModeResult:
    """Compute the m-r product A x^(m-r).

    Args:
        tensor: Any tensor representation.
        x: Vector of dimension n (need not be unit length).
        r: Number of free modes left, 0, 1 or 2.

    Returns:
        A float for r = 0, an n-vector for r = 1, a symmetric n x n matrix
        for r = 2.

    Raises:
        DimensionMismatchError: If x does not have dimension n.
        ModeError: If r is not in {0, 1, 2} or exceeds m.
    """
    x = _as_vector(x, tensor.n)
    _check_order(tensor.m, r)

    if isinstance(tensor, SymTensorDense):
        res = tensor.entries
        for _ in range(tensor.m - r):
            res = res @ x
        if r == 0:
            return float(res)
        if r == 2:
            return 0.5 * (res + res.T)
        return np.array(res, dtype=float)

    if isinstance(tensor, SymTensorSparse):
        return tensor._contract(x, r)

    if isinstance(tensor, RankOnePlusNoise):
        # (a^T x)^(m-r) for the planted term plus the noise contraction
        weight = tensor.lam * float(tensor.a @ x) ** (tensor.m - r)
        noise_part = tensor.noise._contract(x, r)
        if r == 0:
            return weight + noise_part
        if r == 1:
            return weight * tensor.a + noise_part
        return weight * np.outer(tensor.a, tensor.a) + noise_part

    raise TypeError(f"Unsupported tensor type: {type(tensor).__name__}")


def rayleigh(tensor: Tensor, x: np.ndarray) -> float:
    """Generalized Rayleigh quotient A x^m at a unit vector.

    Raises:
        NotUnitVectorError: If |‖x‖ - 1| exceeds the configured unit tolerance.
    """
    vec = _as_vector(x, tensor.n)
    norm = float(np.linalg.norm(vec))
    if abs(norm - 1.0) > get_settings().unit_tol:
        raise NotUnitVectorError(f"Rayleigh quotient needs a unit vector, got norm {norm!r}")
    return contract(tensor, vec, 0)


def gradient(tensor: Tensor, x: np.ndarray) -> np.ndarray:
    """Gradient of x -> A x^m, which is m A x^(m-1)."""
    return tensor.m * contract(tensor, x, 1)


def hessian(tensor: Tensor, x: np.ndarray) -> np.ndarray:
    """Hessian of x -> A x^m, which is m(m-1) A x^(m-2)."""
    return tensor.m * (tensor.m - 1) * contract(tensor, x, 2)


def _check_budget(entries: int, budget: int | None, what: str) -> None:
    limit = get_settings().densify_budget if budget is None else budget
    if entries > limit:
        raise DensifyBudgetError(f"{what} needs {entries} entries, budget is {limit}")


def _rank_one_dense(lam: float, a: np.ndarray, m: int) -> np.ndarray:
    n = a.shape[0]
    # Multiply in sorted index order so every permutation gets the same bits
    grid = np.sort(np.indices((n,) * m).reshape(m, -1), axis=0)
    return (lam * np.prod(a[grid], axis=0)).reshape((n,) * m)


def symmetrize(entries: np.ndarray) -> SymTensorDense:
    """Average an array over all permutations of its modes.

    The result is read back through canonical (sorted) indices so that
    permuted entries are bit-identical.
    """
    arr = np.asarray(entries, dtype=float)
    m, n = arr.ndim, arr.shape[0]
    perms = list(itertools.permutations(range(m)))
    averaged = sum(np.transpose(arr, p) for p in perms) / len(perms)
    grid = np.sort(np.indices(arr.shape).reshape(m, -1), axis=0)
    flat = np.ravel_multi_index(tuple(grid), arr.shape)
    return SymTensorDense(averaged.reshape(-1)[flat].reshape((n,) * m))


def densify(tensor: Tensor, budget: int | None = None) -> SymTensorDense:
    """Materialize a tensor as a dense array.

    Args:
        tensor: Any tensor representation.
        budget: Max number of entries; defaults to SSHOPM_DENSIFY_BUDGET.

    Returns:
        The dense tensor; permutation invariance holds exactly.

    Raises:
        DensifyBudgetError: If n^m exceeds the budget.
    """
    if isinstance(tensor, SymTensorDense):
        return tensor
    _check_budget(tensor.n ** tensor.m, budget, "Densifying")

    noise = tensor.noise if isinstance(tensor, RankOnePlusNoise) else tensor
    arr = np.zeros((tensor.n,) * tensor.m)
    for index, value in noise.terms():
        for perm in set(itertools.permutations(index)):
            arr[perm] = value
    if isinstance(tensor, RankOnePlusNoise) and tensor.lam != 0.0:
        arr = arr + _rank_one_dense(tensor.lam, tensor.a, tensor.m)
    return SymTensorDense(arr)


def sparsify(tensor: SymTensorDense, tol: float = 0.0) -> SymTensorSparse:
    """Canonical sparse form of a dense tensor, keeping entries with |value| > tol."""
    terms = []
    for index in itertools.combinations_with_replacement(range(tensor.n), tensor.m):
        value = float(tensor.entries[index])
        if abs(value) > tol:
            terms.append((index, value))
    return SymTensorSparse.from_terms(tensor.m, tensor.n, terms)


def to_sparse(tensor: Tensor, budget: int | None = None) -> SymTensorSparse:
    """Canonical sparse form of any representation.

    For ``RankOnePlusNoise`` the planted term is expanded over the support
    of ``a`` (budgeted on the number of canonical terms) and merged with the
    noise terms.
    """
    if isinstance(tensor, SymTensorSparse):
        return tensor
    if isinstance(tensor, SymTensorDense):
        return sparsify(tensor)

    terms: list[tuple[tuple[int, ...], float]] = []
    if tensor.lam != 0.0:
        support = np.flatnonzero(tensor.a).tolist()
        count = int(comb(len(support) + tensor.m - 1, tensor.m, exact=True))
        _check_budget(count, budget, "Expanding the planted term")
        terms = [
            (index, tensor.lam * float(np.prod(tensor.a[list(index)])))
            for index in itertools.combinations_with_replacement(support, tensor.m)
        ]
    return SymTensorSparse.from_terms(tensor.m, tensor.n, terms + tensor.noise.terms(), merge="sum")


def _check_same_shape(left: Tensor, right: Tensor) -> None:
    if left.m != right.m or left.n != right.n:
        raise DimensionMismatchError(
            f"Cannot combine (m={left.m}, n={left.n}) with (m={right.m}, n={right.n})"
        )


def add(left: Tensor, right: Tensor) -> Tensor:
    """Sum of two symmetric tensors with matching m and n.

    Sparse + sparse stays sparse, noise added to a ``RankOnePlusNoise`` stays
    structured, dense + dense stays dense; other mixes are densified.
    """
    _check_same_shape(left, right)
    if isinstance(left, SymTensorSparse) and isinstance(right, SymTensorSparse):
        return SymTensorSparse.from_terms(left.m, left.n, left.terms() + right.terms(), merge="sum")
    if isinstance(left, RankOnePlusNoise) and isinstance(right, SymTensorSparse):
        return RankOnePlusNoise(lam=left.lam, a=left.a, noise=add(left.noise, right))
    if isinstance(left, SymTensorSparse) and isinstance(right, RankOnePlusNoise):
        return add(right, left)
    return SymTensorDense(densify(left).entries + densify(right).entries)


def scale(tensor: Tensor, factor: float) -> Tensor:
    """Multiply every entry by a scalar, keeping the representation."""
    if isinstance(tensor, SymTensorDense):
        return SymTensorDense(factor * tensor.entries)
    if isinstance(tensor, SymTensorSparse):
        return SymTensorSparse(m=tensor.m, n=tensor.n, indices=tensor.indices, values=factor * tensor.values)
    return RankOnePlusNoise(lam=factor * tensor.lam, a=tensor.a, noise=scale(tensor.noise, factor))


def negate(tensor: Tensor) -> Tensor:
    """-A, used to turn minimum seeking into maximum seeking."""
    return scale(tensor, -1.0)


def beta_hat(tensor: Tensor) -> float:
    """Crude upper bound (m-1) * sum over all m-tuples of |entry|."""
    if isinstance(tensor, SymTensorDense):
        return (tensor.m - 1) * float(np.sum(np.abs(tensor.entries)))
    if isinstance(tensor, SymTensorSparse):
        return (tensor.m - 1) * tensor.abs_entry_sum()
    return (tensor.m - 1) * _structured_abs_entry_sum(tensor)


def _structured_abs_entry_sum(tensor: RankOnePlusNoise) -> float:
    """Sum of |lam * a_i1...a_im + E_i1...im| over all m-tuples in O(nnz(E)).

    Off the noise support the sum is |lam| * ||a||_1^m; each noise orbit then
    swaps its planted-only contribution for the combined one.
    """
    noise = tensor.noise
    total = abs(tensor.lam) * float(np.sum(np.abs(tensor.a))) ** tensor.m
    if noise.nnz == 0:
        return total
    planted = tensor.lam * np.prod(tensor.a[noise.indices], axis=1)
    correction = np.abs(planted + noise.values) - np.abs(planted)
    return total + float(np.sum(noise._orbits * correction))


def spectral_radius(matrix: np.ndarray) -> float:
    """Largest |eigenvalue| of a symmetric matrix."""
    if matrix.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvalsh(matrix))))


def beta_estimate(tensor: Tensor, samples: int, seed: int | None = None) -> tuple[float, float]:
    """Bracket beta(A) = (m-1) max_x rho(A x^(m-2)) from both sides.

    Args:
        tensor: Any tensor representation.
        samples: Number of uniform sphere samples for the lower bound.
        seed: RNG seed for the samples.

    Returns:
        (lower, upper) with lower from sampled spectral radii (plus the
        planted direction for ``RankOnePlusNoise``) and upper = beta_hat.
    """
    # Import here to avoid circular imports
    from app.tensor.models import sample_sphere_batch

    if samples < 1:
        raise ValueError(f"samples must be at least 1, got {samples}")
    points = sample_sphere_batch(tensor.n, samples, seed)
    if isinstance(tensor, RankOnePlusNoise):
        # rho(A x^(m-2)) is even in x, so a covers -a as well
        points = np.vstack([tensor.a, points])
    radius = max(spectral_radius(contract(tensor, x, 2)) for x in points)
    return (tensor.m - 1) * radius, beta_hat(tensor)
