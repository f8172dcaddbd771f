"""Constructors for test tensors.

Covers the pure rank-one model, the sparse symmetric noise model used in the
shift-parameter experiment, uniform sphere sampling and the degree-4 tensor
built from a set of covariance matrices (TVCA2).
"""
import logging
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.settings import get_settings
from app.tensor.core import (
    DensifyBudgetError,
    DimensionMismatchError,
    RankOnePlusNoise,
    SymmetryError,
    SymTensorDense,
    SymTensorSparse,
    TensorError,
    beta_hat,
    scale,
    symmetrize,
)

logger = logging.getLogger(__name__)

MATRIX_SYMMETRY_TOL = 1e-12

Seed = int | np.random.Generator | None


class NoiseGenSpec(BaseModel):
    """Parameters of the sparse symmetric noise generator."""
    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=1)
    m: int = Field(..., ge=2)
    nnz_draws: int = Field(500, ge=1, description="Random index draws before canonicalization")
    beta_hat_target: float = Field(0.03, gt=0)
    seed: int | None = None


@dataclass(frozen=True)
class Tvca2Input:
    """A set of T symmetric n x n covariance matrices."""
    matrices: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        mats = tuple(np.array(a, dtype=float) for a in self.matrices)
        if not mats:
            raise DimensionMismatchError("At least one matrix is required")
        n = mats[0].shape[0]
        for t, a in enumerate(mats, start=1):
            if a.ndim != 2 or a.shape != (n, n):
                raise DimensionMismatchError(f"Matrix {t} has shape {a.shape}, expected ({n}, {n})")
            if not np.allclose(a, a.T, rtol=0.0, atol=MATRIX_SYMMETRY_TOL):
                raise SymmetryError(f"Matrix {t} is not symmetric")
        object.__setattr__(self, "matrices", mats)

    @property
    def n(self) -> int:
        return self.matrices[0].shape[0]


def make_rank_one(lam: float, a: np.ndarray, m: int) -> RankOnePlusNoise:
    """lam * a^(x)m with a normalized and no noise.

    Raises:
        TensorError: If a is the zero vector.
    """
    a = np.asarray(a, dtype=float).reshape(-1)
    norm = float(np.linalg.norm(a))
    if norm == 0.0:
        raise TensorError("Planted vector must be nonzero")
    return RankOnePlusNoise(lam=lam, a=a / norm, noise=SymTensorSparse.zeros(m, a.shape[0]))


def make_rank_one_plus_noise(lam: float, a: np.ndarray, noise: SymTensorSparse) -> RankOnePlusNoise:
    """lam * a^(x)m + noise with a normalized."""
    planted = make_rank_one(lam, a, noise.m)
    return RankOnePlusNoise(lam=planted.lam, a=planted.a, noise=noise)


def gen_sparse_noise(spec: NoiseGenSpec) -> SymTensorSparse:
    """Sparse symmetric Gaussian noise scaled to an exact beta_hat.

    Draws ``nnz_draws`` index tuples uniformly from all n^m tuples, maps each
    to its canonical representative (keeping the first value on collisions),
    assigns standard normal values, then applies one global factor so that
    ``beta_hat(result) == beta_hat_target``.
    """
    rng = np.random.default_rng(spec.seed)
    draws = rng.integers(0, spec.n, size=(spec.nnz_draws, spec.m))
    values = rng.standard_normal(spec.nnz_draws)
    raw = SymTensorSparse.from_terms(
        spec.m, spec.n, [(tuple(d), v) for d, v in zip(draws.tolist(), values.tolist())], merge="first"
    )
    if raw.nnz < spec.nnz_draws:
        logger.info("Merged %d colliding draws into existing orbits", spec.nnz_draws - raw.nnz)
    return scale(raw, spec.beta_hat_target / beta_hat(raw))


def sample_sphere(n: int, seed: Seed = None) -> np.ndarray:
    """One point uniform on the unit sphere in R^n (normalized isotropic normal)."""
    return sample_sphere_batch(n, 1, seed)[0]


def sample_sphere_batch(n: int, count: int, seed: Seed = None) -> np.ndarray:
    """``count`` independent uniform sphere points as rows of a (count, n) array."""
    if n < 1:
        raise DimensionMismatchError(f"Dimension must be positive, got {n}")
    rng = np.random.default_rng(seed)
    points = rng.standard_normal((count, n))
    norms = np.linalg.norm(points, axis=1)
    # Exact zeros have probability zero but would break the division
    while np.any(norms == 0.0):
        bad = norms == 0.0
        points[bad] = rng.standard_normal((int(bad.sum()), n))
        norms = np.linalg.norm(points, axis=1)
    return points / norms[:, None]


def build_tvca2(data: Tvca2Input, budget: int | None = None) -> SymTensorDense:
    """Symmetric 4-tensor A with A x^4 = sum_t (x^T A_t x)^2 for every x.

    Built by symmetrizing sum_t A_t (x) A_t over all 24 mode permutations,
    which leaves the quartic form unchanged.

    Raises:
        DensifyBudgetError: If n^4 exceeds the densify budget.
    """
    limit = get_settings().densify_budget if budget is None else budget
    if data.n ** 4 > limit:
        raise DensifyBudgetError(f"TVCA2 tensor needs {data.n ** 4} entries, budget is {limit}")
    stacked = sum(np.einsum("ij,kl->ijkl", a, a) for a in data.matrices)
    return symmetrize(stacked)


def random_symmetric_dense(n: int, m: int, rng: np.random.Generator) -> SymTensorDense:
    """Dense tensor with standard normal entries averaged over mode permutations."""
    return symmetrize(rng.standard_normal((n,) * m))


def random_sparse(n: int, m: int, terms: int, rng: np.random.Generator) -> SymTensorSparse:
    """Sparse tensor from ``terms`` random canonical tuples with normal values."""
    draws = rng.integers(0, n, size=(terms, m))
    values = rng.standard_normal(terms)
    return SymTensorSparse.from_terms(
        m, n, [(tuple(d), v) for d, v in zip(draws.tolist(), values.tolist())], merge="first"
    )
