"""Shifted symmetric higher-order power method (SS-HOPM).

The iteration is x <- normalize(A x^(m-1) + alpha x). A solve stops when
successive Rayleigh quotients agree to ``tol`` and the eigen-residual
||A x^(m-1) - lam x|| is within the residual gate, so every pair marked
converged satisfies the residual bound.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field

from app.settings import get_settings
from app.tensor.core import (
    DimensionMismatchError,
    NotUnitVectorError,
    Tensor,
    contract,
    hessian,
    negate,
    rayleigh,
    spectral_radius,
)
from app.tensor.models import sample_sphere

logger = logging.getLogger(__name__)

# Below this norm the normalized update is undefined
DEGENERATE_STEP_NORM = 1e-14


class SolverError(Exception):
    """Base exception for SS-HOPM errors."""
    pass


class DegenerateStepError(SolverError):
    """Raised when A x^(m-1) + alpha x vanishes and cannot be normalized."""
    pass


class ResidualGateError(SolverError):
    """Raised when stability is requested for a pair that is not an eigenpair."""
    pass


class Stability(str, Enum):
    """Fixed-point classification of an eigenpair under SS-HOPM."""
    NEGATIVE_STABLE = "negative-stable"  # local max of the Rayleigh quotient
    POSITIVE_STABLE = "positive-stable"  # local min
    UNSTABLE = "unstable"
    UNCLASSIFIED = "unclassified"


class SshopmConfig(BaseModel):
    """Solver settings for one SS-HOPM run."""
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(..., description="Shift parameter")
    tol: float = Field(1e-10, gt=0, description="Tolerance on successive Rayleigh quotients")
    max_iters: int = Field(1000, ge=1)
    seed: int | None = Field(None, description="Seed for the random start when none is given")
    find_minimum: bool = Field(False, description="Run on -A to seek local minima")
    classify: bool = True


@dataclass(frozen=True)
class StabilityReport:
    """Outcome of the fixed-point stability test."""
    label: Stability
    spectral_radius: float | None = None
    reason: str | None = None


@dataclass(frozen=True, eq=False)
class EigenPair:
    """Unit vector x and lam = A x^m with the eigen-residual of the pair."""
    x: np.ndarray
    lam: float
    residual: float
    converged: bool
    stability: Stability = Stability.UNCLASSIFIED
    stability_report: StabilityReport | None = None


@dataclass(frozen=True)
class TraceEntry:
    k: int
    lam: float
    a_dot_x: float | None = None


@dataclass
class SshopmTrace:
    """Iterates of one solve.

    ``lam`` is the Rayleigh quotient of the tensor actually being maximized,
    i.e. of -A when the solve seeks a minimum.
    """
    iterates: list[TraceEntry] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0

    def lambdas(self) -> np.ndarray:
        return np.array([entry.lam for entry in self.iterates])

    def is_monotone(self, slack: float = 1e-12) -> bool:
        """True when the Rayleigh quotients never drop by more than ``slack``."""
        lams = self.lambdas()
        return bool(np.all(np.diff(lams) >= -slack))


def eigen_residual(tensor: Tensor, x: np.ndarray, lam: float) -> float:
    """||A x^(m-1) - lam x||."""
    return float(np.linalg.norm(contract(tensor, x, 1) - lam * x))


def sshopm_step(tensor: Tensor, x: np.ndarray, alpha: float) -> np.ndarray:
    """One SS-HOPM update (A x^(m-1) + alpha x) / ||A x^(m-1) + alpha x||.

    Raises:
        DegenerateStepError: If the update vector has norm <= 1e-14.
    """
    update = contract(tensor, x, 1) + alpha * np.asarray(x, dtype=float)
    norm = float(np.linalg.norm(update))
    if norm <= DEGENERATE_STEP_NORM:
        raise DegenerateStepError(f"Update vector has norm {norm:.3e} at alpha={alpha}")
    return update / norm


def _unit_start(x0: np.ndarray, n: int) -> np.ndarray:
    x = np.asarray(x0, dtype=float).reshape(-1)
    if x.shape[0] != n:
        raise DimensionMismatchError(f"Start vector has dimension {x.shape[0]}, expected {n}")
    norm = float(np.linalg.norm(x))
    if abs(norm - 1.0) > get_settings().unit_tol:
        raise NotUnitVectorError(f"Start vector must be unit length, got norm {norm!r}")
    return x / norm


def _overlap(ground_truth: np.ndarray | None, x: np.ndarray) -> float | None:
    if ground_truth is None:
        return None
    return float(abs(ground_truth @ x))


def sshopm_solve(
    tensor: Tensor,
    config: SshopmConfig,
    x0: np.ndarray | None = None,
    ground_truth: np.ndarray | None = None,
) -> tuple[EigenPair, SshopmTrace]:
    """Run SS-HOPM to convergence or ``max_iters``.

    Args:
        tensor: Any tensor representation.
        config: Shift, tolerance, iteration cap and seed.
        x0: Unit start vector; drawn uniformly from the sphere with
            ``config.seed`` when absent.
        ground_truth: Planted direction a; when given, |a^T x_k| is traced.

    Returns:
        The final pair (lam recomputed as the Rayleigh quotient of A) and
        the trace. A pair that hit ``max_iters`` has ``converged=False``.

    Raises:
        DegenerateStepError: Propagated from ``sshopm_step``.
    """
    settings = get_settings()
    work = negate(tensor) if config.find_minimum else tensor
    x = sample_sphere(tensor.n, config.seed) if x0 is None else _unit_start(x0, tensor.n)

    lam = rayleigh(work, x)
    trace = SshopmTrace(iterates=[TraceEntry(0, lam, _overlap(ground_truth, x))])
    for k in range(1, config.max_iters + 1):
        x = sshopm_step(work, x, config.alpha)
        lam_next = contract(work, x, 0)
        trace.iterates.append(TraceEntry(k, lam_next, _overlap(ground_truth, x)))
        trace.iterations = k
        settled = abs(lam_next - lam) <= config.tol
        lam = lam_next
        if settled and eigen_residual(work, x, lam) <= settings.residual_gate:
            trace.converged = True
            break

    lam = rayleigh(work, x)
    residual = eigen_residual(work, x, lam)
    report = None
    if config.classify and trace.converged:
        report = classify_stability(work, EigenPair(x, lam, residual, True), config.alpha)
        if config.find_minimum:
            report = _mirror(report)

    if trace.converged:
        logger.debug("SS-HOPM converged in %d iterations, lam=%.12g", trace.iterations, lam)
    else:
        logger.warning(
            "SS-HOPM did not converge in %d iterations (alpha=%g, residual=%.3e)",
            config.max_iters, config.alpha, residual,
        )

    pair = EigenPair(
        x=x,
        lam=-lam if config.find_minimum else lam,
        residual=residual,
        converged=trace.converged,
        stability=report.label if report else Stability.UNCLASSIFIED,
        stability_report=report,
    )
    return pair, trace


def _mirror(report: StabilityReport) -> StabilityReport:
    # A local max of -A is a local min of A
    swap = {
        Stability.NEGATIVE_STABLE: Stability.POSITIVE_STABLE,
        Stability.POSITIVE_STABLE: Stability.NEGATIVE_STABLE,
    }
    return StabilityReport(swap.get(report.label, report.label), report.spectral_radius, report.reason)


def start_vectors(n: int, starts: int, seed: int | None) -> list[np.ndarray]:
    """Uniform sphere starts, one independent stream per start spawned from ``seed``."""
    children = np.random.SeedSequence(seed).spawn(starts)
    return [sample_sphere(n, np.random.default_rng(child)) for child in children]


def sshopm_multistart(
    tensor: Tensor,
    starts: int,
    config: SshopmConfig,
    ground_truth: np.ndarray | None = None,
) -> list[tuple[EigenPair, SshopmTrace]]:
    """Independent solves from ``starts`` random starts spawned from ``config.seed``."""
    return [
        sshopm_solve(tensor, config, x0=x0, ground_truth=ground_truth)
        for x0 in start_vectors(tensor.n, starts, config.seed)
    ]


def principal_pair(results: list[tuple[EigenPair, SshopmTrace]]) -> EigenPair:
    """Largest-|lam| pair, preferring converged runs."""
    pairs = [pair for pair, _ in results]
    converged = [p for p in pairs if p.converged]
    return max(converged or pairs, key=lambda p: abs(p.lam))


def complement_basis(x: np.ndarray) -> np.ndarray:
    """Orthonormal basis (n x (n-1)) of the complement of unit x.

    Orthogonalizes the standard basis against x after dropping the axis
    where |x_i| is largest, so the result is reproducible.
    """
    n = x.shape[0]
    drop = int(np.argmax(np.abs(x)))
    columns = [x] + [np.eye(n)[:, j] for j in range(n) if j != drop]
    q, _ = scipy.linalg.qr(np.column_stack(columns))
    return q[:, 1:]


def classify_stability(
    tensor: Tensor,
    pair: EigenPair,
    alpha: float,
    margin: float | None = None,
) -> StabilityReport:
    """Classify a fixed point of the SS-HOPM map with shift ``alpha``.

    On an orthonormal basis P of the complement of x, the pair is stable
    when the spectral radius of ((m-1) P^T A x^(m-2) P + alpha I) / (lam + alpha)
    is below 1 - margin. Stable pairs are labeled negative-stable (local max)
    or positive-stable (local min) from the definiteness of
    (m-1) P^T A x^(m-2) P - lam I.

    Raises:
        ResidualGateError: If the pair residual exceeds the residual gate.
    """
    settings = get_settings()
    margin = settings.stability_margin if margin is None else margin
    if pair.residual > settings.residual_gate:
        raise ResidualGateError(
            f"Pair residual {pair.residual:.3e} exceeds the gate {settings.residual_gate:.1e}"
        )

    denom = pair.lam + alpha
    if abs(denom) <= 1e-12 * max(1.0, abs(pair.lam), abs(alpha)):
        return StabilityReport(
            Stability.UNCLASSIFIED,
            reason=f"lam + alpha = {denom:.3e} is numerically zero; the Jacobian is undefined",
        )

    basis = complement_basis(pair.x)
    projected = (tensor.m - 1) * basis.T @ contract(tensor, pair.x, 2) @ basis
    projected = 0.5 * (projected + projected.T)
    jacobian = (projected + alpha * np.eye(projected.shape[0])) / denom
    radius = spectral_radius(jacobian)
    if radius >= 1.0 - margin:
        return StabilityReport(Stability.UNSTABLE, radius)

    curvature = scipy.linalg.eigvalsh(projected) - pair.lam if projected.size else np.zeros(0)
    if curvature.size and np.all(curvature < 0):
        label = Stability.NEGATIVE_STABLE
    elif curvature.size and np.all(curvature > 0):
        label = Stability.POSITIVE_STABLE
    else:
        label = Stability.NEGATIVE_STABLE if denom > 0 else Stability.POSITIVE_STABLE
    return StabilityReport(label, radius)


def rank_one_next_cosine(lam: float, gamma: float, alpha: float, m: int) -> float:
    """a^T x_2 after one step on lam * a^(x)m from a start with a^T x_1 = gamma."""
    delta_sq = 1.0 - gamma**2
    along = lam * gamma ** (m - 1) + alpha * gamma
    return along / math.sqrt(along**2 + alpha**2 * delta_sq)


def shifted_convexity_margin(tensor: Tensor, x: np.ndarray, alpha: float) -> float:
    """Smallest eigenvalue of m(m-1) A x^(m-2) + m alpha I.

    This is the Hessian of f(x) = A x^m + (m alpha / 2) x^T x; a positive
    margin everywhere makes the shifted iteration monotone.
    """
    return float(scipy.linalg.eigvalsh(hessian(tensor, x)).min() + tensor.m * alpha)
