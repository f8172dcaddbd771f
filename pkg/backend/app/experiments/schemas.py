"""Pydantic schemas for the JSON printed by the command-line front end."""
from pydantic import BaseModel, ConfigDict, Field

from app.experiments.sweep import SweepSummary
from app.solver.bounds import BoundsReport, ThresholdReport
from app.solver.sshopm import EigenPair, SshopmTrace

__all__ = [
    "BoundsReport",
    "EigenPairReport",
    "ErrorReport",
    "SuccessRateRow",
    "SweepSummaryReport",
    "TensorFileReport",
]


class EigenPairReport(BaseModel):
    """One solve, printed as one JSON line."""
    model_config = ConfigDict(populate_by_name=True)

    start: int
    lam: float | None = Field(None, alias="lambda")
    x: list[float] = Field(default_factory=list)
    residual: float | None = None
    converged: bool = False
    iterations: int = 0
    stability: str | None = None
    spectral_radius: float | None = None
    a_dot_x: float | None = Field(None, description="Overlap with --reference when given")
    error: str | None = None

    @classmethod
    def from_solve(
        cls, start: int, pair: EigenPair, trace: SshopmTrace, a_dot_x: float | None = None
    ) -> "EigenPairReport":
        report = pair.stability_report
        return cls(
            start=start,
            lam=pair.lam,
            x=pair.x.tolist(),
            residual=pair.residual,
            converged=pair.converged,
            iterations=trace.iterations,
            stability=pair.stability.value,
            spectral_radius=report.spectral_radius if report else None,
            a_dot_x=a_dot_x,
        )


class TensorFileReport(BaseModel):
    """Summary of a tensor file written by gen-noise or tvca2."""
    path: str
    m: int
    n: int
    terms: int
    beta_hat: float


class SuccessRateRow(BaseModel):
    alpha: float
    success_rate: float
    trials: int


class SweepSummaryReport(BaseModel):
    """Sweep outcome with the artifact paths."""
    records: int
    csv_path: str
    summary_path: str
    plot_path: str
    lambda_assumed: bool
    beta_hat_tensor: float
    thm6_alpha_min: float | None
    thresholds: ThresholdReport | None
    rows: list[SuccessRateRow]

    @classmethod
    def from_summary(
        cls, summary: SweepSummary, records: int, csv_path: str, summary_path: str, plot_path: str
    ) -> "SweepSummaryReport":
        return cls(
            records=records,
            csv_path=csv_path,
            summary_path=summary_path,
            plot_path=plot_path,
            lambda_assumed=summary.lambda_assumed,
            beta_hat_tensor=summary.beta_hat_tensor,
            thm6_alpha_min=summary.thm6_alpha_min,
            thresholds=summary.thresholds,
            rows=[SuccessRateRow(alpha=r.alpha, success_rate=r.success_rate, trials=r.trials) for r in summary.rows],
        )


class ErrorReport(BaseModel):
    """Error payload written to stderr."""
    error: str
    detail: str
