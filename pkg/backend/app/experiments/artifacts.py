"""CSV and SVG output for sweeps."""
import csv
import logging
from pathlib import Path

from matplotlib.figure import Figure

from app.experiments.sweep import SweepRecord, SweepSummary
from app.tensor.io import format_value

logger = logging.getLogger(__name__)

RECORD_COLUMNS = [
    "alpha", "trial", "noise_draw", "final_lambda", "a_dot_x", "iterations", "converged", "success",
]
SUMMARY_COLUMNS = ["alpha", "success_rate", "trials"]


def _flag(value: bool) -> str:
    return "true" if value else "false"


def emit_csv(records: list[SweepRecord], path: str | Path) -> Path:
    """Write one row per record with floats at 17 significant digits."""
    path = Path(path)
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(RECORD_COLUMNS)
        for r in records:
            writer.writerow([
                format_value(r.alpha),
                r.trial,
                r.noise_draw,
                format_value(r.final_lambda),
                format_value(r.a_dot_x),
                r.iterations,
                _flag(r.converged),
                _flag(r.success),
            ])
    logger.info("Wrote %d records to %s", len(records), path)
    return path


def emit_summary_csv(summary: SweepSummary, path: str | Path) -> Path:
    """Write alpha, success_rate, trials for every alpha."""
    path = Path(path)
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for row in summary.rows:
            writer.writerow([format_value(row.alpha), format_value(row.success_rate), row.trials])
    return path


def build_plot(summary: SweepSummary) -> Figure:
    """Success rate against alpha, with the worst-case stability thresholds marked.

    The principal and spurious-envelope thresholds are drawn as vertical
    lines and labeled next to the published values they are compared with.
    """
    fig = Figure(figsize=(7.0, 4.0))
    ax = fig.add_subplot()
    alphas = [row.alpha for row in summary.rows]
    rates = [row.success_rate for row in summary.rows]
    ax.plot(alphas, rates, marker="o", markersize=3, color="black", label="success rate")

    t = summary.thresholds
    if t is not None:
        ax.axvline(
            t.principal, color="tab:blue", linestyle="--",
            label=f"principal {t.principal:.4f} (published {t.published_principal})",
        )
        ax.axvline(
            t.spurious_envelope, color="tab:red", linestyle=":",
            label=f"spurious envelope {t.spurious_envelope:.4f} (published {t.published_spurious})",
        )

    title = "SS-HOPM success rate"
    if summary.lambda_assumed:
        title += " (lambda = 1 assumed)"
    ax.set_title(title)
    ax.set_xlabel("alpha")
    ax.set_ylabel("success rate")
    ax.set_ylim(-0.05, 1.05)
    ax.legend(loc="lower left", fontsize="small")
    fig.tight_layout()
    return fig


def emit_plot(summary: SweepSummary, path: str | Path) -> Path:
    """Save ``build_plot`` as a standalone SVG file."""
    path = Path(path)
    build_plot(summary).savefig(path, format="svg")
    logger.info("Wrote plot to %s", path)
    return path
