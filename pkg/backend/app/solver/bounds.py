"""Closed-form perturbation bounds for the rank-one plus noise model.

Every function takes ``beta_e``, an upper bound on beta(E) of the noise term.
beta itself is not computable in general; pass ``beta_hat(E)`` or the upper
end of ``beta_estimate``.
"""
import logging
import math

from pydantic import BaseModel, ConfigDict, Field

logger = logging.getLogger(__name__)

# Published thresholds for n = 100, m = 4, beta_hat(E) = 0.03
PUBLISHED_PRINCIPAL_ALPHA = -0.3365
PUBLISHED_SPURIOUS_ALPHA = 1.015

TRIG_TOL = 1e-9


class BoundsError(ValueError):
    """Base exception for bound calculators."""
    pass


class HypothesisError(BoundsError):
    """Raised when the hypothesis of a bound does not hold for the inputs."""
    pass


class NoiseModelParams(BaseModel):
    """Parameters of A = lam * a^(x)m + E."""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    lam: float = Field(..., gt=0, alias="lambda")
    m: int = Field(..., ge=3)
    n: int = Field(1, ge=1)
    beta_e: float = Field(..., ge=0, description="Upper bound on beta(E)")


class PrincipalBounds(BaseModel):
    """Interval for |lam_p| and a lower bound on |cos(theta)|^m."""
    lambda_lo: float
    lambda_hi: float
    cos_m_lo: float
    vacuous: bool = Field(..., description="True when cos_m_lo <= 0 and the angle bound says nothing")


class ThresholdReport(BaseModel):
    """Worst-case stability thresholds for the shift parameter.

    ``principal`` uses the interval and angle bound for the principal pair.
    The spurious values bound the shift above which spurious pairs may also
    be stable: ``spurious_envelope`` maximizes |sin cos^(m-2)| over theta with
    lam_p = 0, ``spurious_crude`` uses |sin cos^(m-2)| <= 1 with lam_p = lam.
    """
    principal: float
    spurious_envelope: float
    spurious_crude: float
    principal_limit: float = Field(..., description="beta_e -> 0 limit, -lam/2")
    spurious_limit: float = Field(..., description="beta_e -> 0 limit, lam(m/2 - 1)")
    published_principal: float = PUBLISHED_PRINCIPAL_ALPHA
    published_spurious: float = PUBLISHED_SPURIOUS_ALPHA
    principal_gap: float
    spurious_envelope_gap: float
    spurious_crude_gap: float


class BoundsReport(BaseModel):
    """All theorem values for one set of model parameters."""
    params: NoiseModelParams
    epsilon: float
    gamma: float
    principal_bounds: PrincipalBounds
    lemma2_noise_bound: float
    thm2_certificate_level: float
    thm3_tail: float
    thm4: ThresholdReport
    thm5_alpha_min: float | None
    thm5_reason: str | None = None
    thm6_alpha_min: float | None
    thm6_reason: str | None = None
    beta_upper: float = Field(
        ..., description="(m-1)|lam| + beta_e, an upper bound on beta(A) for any unit a; not beta_hat(A)"
    )
    beta_estimate: tuple[float, float] | None = Field(None, description="Sampled bracket on beta(E), when a noise tensor is given")


def lemma2_bound(beta: float, m: int) -> float:
    """Bound beta/(m-1) on |A x^m| over the unit sphere."""
    return beta / (m - 1)


def thm1_bounds(p: NoiseModelParams) -> PrincipalBounds:
    """Interval for the principal eigenvalue and its angle to a.

    |lam| - beta_e/(m-1) <= |lam_p| <= |lam| + beta_e/(m-1) and
    |cos(theta)|^m >= 1 - 2 beta_e / (|lam| (m-1)). A nonpositive angle
    bound is returned as is and flagged vacuous.
    """
    lam = abs(p.lam)
    shift = p.beta_e / (p.m - 1)
    cos_m_lo = 1.0 - 2.0 * p.beta_e / (lam * (p.m - 1))
    vacuous = cos_m_lo <= 0.0
    if vacuous:
        logger.warning("Angle bound is vacuous: cos^m lower bound %.6g <= 0", cos_m_lo)
    return PrincipalBounds(lambda_lo=lam - shift, lambda_hi=lam + shift, cos_m_lo=cos_m_lo, vacuous=vacuous)


def thm2_check(p: NoiseModelParams, rayleigh_value: float, epsilon: float) -> bool:
    """True when |A x^m| >= eps^m + beta_e/(m-1), which certifies |a^T x| >= eps.

    False only means no certificate; it does not show |a^T x| < eps.

    Raises:
        HypothesisError: If epsilon <= 0.
    """
    if epsilon <= 0:
        raise HypothesisError(f"epsilon must be positive, got {epsilon}")
    return abs(rayleigh_value) >= thm3_rayleigh_level(p, epsilon)


def thm3_tail(n: int, epsilon: float) -> float:
    """Chebyshev bound min(1, 1/(n eps^2)) on Pr(|a^T x| > eps) for uniform x.

    Raises:
        HypothesisError: If n < 1 or epsilon <= 0.
    """
    if n < 1:
        raise HypothesisError(f"n must be at least 1, got {n}")
    if epsilon <= 0:
        raise HypothesisError(f"epsilon must be positive, got {epsilon}")
    return min(1.0, 1.0 / (n * epsilon**2))


def thm3_rayleigh_level(p: NoiseModelParams, epsilon: float) -> float:
    """eps^m + beta_e/(m-1).

    A random start exceeds this Rayleigh level with probability at most
    ``thm3_tail(n, eps)``.
    """
    return epsilon**p.m + lemma2_bound(p.beta_e, p.m)


def thm4_alpha_min(p: NoiseModelParams, lambda_p: float, sin_theta: float, cos_theta: float) -> float:
    """Sufficient shift for a perturbed eigenpair to be a stable fixed point.

    Returns (-lam_p + (m-1) lam |sin(theta) cos(theta)^(m-2)| + beta_e) / 2.

    Args:
        p: Model parameters.
        lambda_p: The eigenvalue of the perturbed pair.
        sin_theta: Sine of the angle between the eigenvector and a.
        cos_theta: Cosine of the same angle.

    Raises:
        HypothesisError: If sin^2 + cos^2 differs from 1 by more than 1e-9.
    """
    if abs(sin_theta**2 + cos_theta**2 - 1.0) > TRIG_TOL:
        raise HypothesisError(f"sin^2 + cos^2 = {sin_theta**2 + cos_theta**2!r}, expected 1")
    coupling = abs(sin_theta * cos_theta ** (p.m - 2))
    return (-lambda_p + (p.m - 1) * p.lam * coupling + p.beta_e) / 2.0


def _peak_angle(m: int) -> float:
    # sin(t) cos(t)^(m-2) increases on [0, t*] with tan(t*)^2 = 1/(m-2)
    return math.atan(1.0 / math.sqrt(m - 2))


def thm4_worst_case(p: NoiseModelParams) -> ThresholdReport:
    """Compose the principal-pair bounds with the stability threshold.

    Principal: lam_p = |lam| - beta_e/(m-1) and theta anywhere in
    [0, arccos(cos_m_lo^(1/m))], taking the theta that maximizes the
    coupling term. When the angle bound is vacuous the whole range
    [0, pi/2] is admissible.
    """
    bounds = thm1_bounds(p)
    theta_max = math.pi / 2 if bounds.vacuous else math.acos(min(1.0, bounds.cos_m_lo ** (1.0 / p.m)))
    theta = min(theta_max, _peak_angle(p.m))
    principal = thm4_alpha_min(p, bounds.lambda_lo, math.sin(theta), math.cos(theta))

    peak = _peak_angle(p.m)
    spurious_envelope = thm4_alpha_min(p, 0.0, math.sin(peak), math.cos(peak))
    spurious_crude = (-p.lam + (p.m - 1) * p.lam + p.beta_e) / 2.0

    return ThresholdReport(
        principal=principal,
        spurious_envelope=spurious_envelope,
        spurious_crude=spurious_crude,
        principal_limit=-p.lam / 2.0,
        spurious_limit=p.lam * (p.m / 2.0 - 1.0),
        principal_gap=principal - PUBLISHED_PRINCIPAL_ALPHA,
        spurious_envelope_gap=spurious_envelope - PUBLISHED_SPURIOUS_ALPHA,
        spurious_crude_gap=spurious_crude - PUBLISHED_SPURIOUS_ALPHA,
    )


def thm5_alpha_min(lam: float, gamma: float, m: int) -> float:
    """-lam gamma^(m-2) / 2.

    Above this shift one step on lam * a^(x)m strictly increases |a^T x|
    from a start with a^T x = gamma.

    Raises:
        HypothesisError: If lam <= 0 or gamma^(m-2) <= 0.
    """
    if lam <= 0:
        raise HypothesisError(f"lam must be positive, got {lam}")
    power = gamma ** (m - 2)
    if power <= 0:
        raise HypothesisError(f"gamma^(m-2) must be positive, got {power!r} for gamma={gamma}, m={m}")
    return -lam * power / 2.0


def thm6_alpha_min(p: NoiseModelParams) -> float:
    """beta_e: any larger shift gives monotone convergence for even m.

    Raises:
        HypothesisError: If m is odd.
    """
    if p.m % 2:
        raise HypothesisError(f"The monotone-convergence shift needs even m, got m={p.m}")
    return p.beta_e


def theorem_summary(p: NoiseModelParams, epsilon: float = 0.9, gamma: float | None = None) -> BoundsReport:
    """Evaluate every bound for one parameter set.

    Args:
        p: Model parameters.
        epsilon: Overlap level for the certificate and tail bounds.
        gamma: Start overlap a^T x for the one-step threshold; defaults to
            1/sqrt(n), the typical overlap of a random start.

    Returns:
        The report; thresholds whose hypothesis fails are None with a reason.
    """
    gamma = 1.0 / math.sqrt(p.n) if gamma is None else gamma

    thm5, thm5_reason = None, None
    try:
        thm5 = thm5_alpha_min(p.lam, gamma, p.m)
    except HypothesisError as e:
        thm5_reason = str(e)

    thm6, thm6_reason = None, None
    try:
        thm6 = thm6_alpha_min(p)
    except HypothesisError as e:
        thm6_reason = str(e)

    return BoundsReport(
        params=p,
        epsilon=epsilon,
        gamma=gamma,
        principal_bounds=thm1_bounds(p),
        lemma2_noise_bound=lemma2_bound(p.beta_e, p.m),
        thm2_certificate_level=thm3_rayleigh_level(p, epsilon),
        thm3_tail=thm3_tail(p.n, epsilon),
        thm4=thm4_worst_case(p),
        thm5_alpha_min=thm5,
        thm5_reason=thm5_reason,
        thm6_alpha_min=thm6,
        thm6_reason=thm6_reason,
        beta_upper=(p.m - 1) * abs(p.lam) + p.beta_e,
    )
