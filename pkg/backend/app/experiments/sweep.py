"""Success rate of SS-HOPM versus the shift parameter.

For each noise draw the tensor is A = lam * e1^(x)m + E with E sparse and
scaled to a target beta_hat. Every (alpha, trial) runs one solve from a fresh
uniform start; a trial succeeds when it converges with |a^T x| above the
success threshold.
"""
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from app.settings import get_settings
from app.solver.bounds import NoiseModelParams, ThresholdReport, thm4_worst_case, thm6_alpha_min
from app.solver.sshopm import SolverError, SshopmConfig, sshopm_solve
from app.tensor.core import RankOnePlusNoise, SymTensorSparse, beta_hat
from app.tensor.models import NoiseGenSpec, gen_sparse_noise, make_rank_one_plus_noise, sample_sphere

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Raised when a sweep config file or value cannot be used."""
    pass


def default_alpha_grid() -> list[float]:
    """-1 to 5 in steps of 0.1."""
    return [round(-1.0 + 0.1 * k, 10) for k in range(61)]


def parse_alpha_grid(text: str) -> list[float]:
    """Parse "a, b, c" or an inclusive range "start:stop:step"."""
    text = text.strip()
    if ":" in text:
        try:
            start, stop, step = (float(part) for part in text.split(":"))
        except ValueError as e:
            raise ConfigError(f"alpha_grid range must be start:stop:step, got {text!r}") from e
        if step <= 0 or stop < start:
            raise ConfigError(f"alpha_grid range {text!r} is empty")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + step * k, 10) for k in range(count)]
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ConfigError(f"alpha_grid must be a comma-separated list, got {text!r}") from e


class SweepConfig(BaseModel):
    """Settings of one shift-parameter sweep."""
    model_config = ConfigDict(frozen=True, populate_by_name=True, extra="forbid")

    n: int = Field(100, ge=1)
    m: int = Field(4, ge=2)
    nnz_draws: int = Field(500, ge=1)
    beta_hat_target: float = Field(0.03, ge=0, description="0 gives a pure rank-one tensor")
    lam: float = Field(1.0, alias="lambda")
    alpha_grid: list[float] = Field(default_factory=default_alpha_grid, min_length=1)
    starts_per_alpha: int = Field(10, ge=1)
    success_threshold: float = Field(0.9, gt=0, le=1)
    master_seed: int = Field(0, ge=0)
    noise_redraws: int = Field(1, ge=1)
    tol: float = Field(1e-10, gt=0)
    max_iters: int = Field(1000, ge=1)
    workers: int | None = Field(None, ge=1, description="Defaults to SSHOPM_WORKERS")

    @field_validator("alpha_grid", mode="before")
    @classmethod
    def _split_grid(cls, value: Any) -> Any:
        if isinstance(value, str):
            return parse_alpha_grid(value)
        return value

    @property
    def lambda_assumed(self) -> bool:
        """True when lam was left at its default of 1."""
        return "lam" not in self.model_fields_set


@dataclass(frozen=True)
class SweepRecord:
    """Outcome of one (alpha, trial) solve."""
    alpha: float
    trial: int
    noise_draw: int
    final_lambda: float
    a_dot_x: float
    iterations: int
    converged: bool
    success: bool
    error: str | None = None


@dataclass(frozen=True)
class SuccessRow:
    alpha: float
    success_rate: float
    trials: int


@dataclass(frozen=True)
class SweepSummary:
    """Per-alpha success rates and the reference thresholds."""
    rows: list[SuccessRow]
    thresholds: ThresholdReport | None
    thm6_alpha_min: float | None
    beta_hat_tensor: float
    lambda_assumed: bool

    def mean_rate(self, lo: float, hi: float) -> float:
        """Mean success rate over alphas in [lo, hi]."""
        rates = [row.success_rate for row in self.rows if lo - 1e-9 <= row.alpha <= hi + 1e-9]
        if not rates:
            raise ValueError(f"No alpha in [{lo}, {hi}]")
        return float(np.mean(rates))


def _derived_seed(master_seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=key)


def build_sweep_tensor(config: SweepConfig, noise_draw: int) -> RankOnePlusNoise:
    """lam * e1^(x)m + E for one noise draw."""
    a = np.zeros(config.n)
    a[0] = 1.0
    if config.beta_hat_target == 0:
        noise = SymTensorSparse.zeros(config.m, config.n)
    else:
        seed = int(_derived_seed(config.master_seed, noise_draw).generate_state(1)[0])
        noise = gen_sparse_noise(
            NoiseGenSpec(
                n=config.n,
                m=config.m,
                nnz_draws=config.nnz_draws,
                beta_hat_target=config.beta_hat_target,
                seed=seed,
            )
        )
    return make_rank_one_plus_noise(config.lam, a, noise)


def _run_trial(
    tensor: RankOnePlusNoise, config: SweepConfig, noise_draw: int, alpha_index: int, trial: int
) -> SweepRecord:
    alpha = config.alpha_grid[alpha_index]
    rng = np.random.default_rng(_derived_seed(config.master_seed, noise_draw, alpha_index, trial))
    x0 = sample_sphere(config.n, rng)
    solver_config = SshopmConfig(alpha=alpha, tol=config.tol, max_iters=config.max_iters, classify=False)
    try:
        pair, trace = sshopm_solve(tensor, solver_config, x0=x0)
    except SolverError as e:
        logger.warning("Trial %d at alpha=%g (draw %d) failed: %s", trial, alpha, noise_draw, e)
        return SweepRecord(alpha, trial, noise_draw, math.nan, math.nan, 0, False, False, str(e))

    a_dot_x = float(tensor.a @ pair.x)
    success = pair.converged and abs(a_dot_x) > config.success_threshold
    return SweepRecord(alpha, trial, noise_draw, pair.lam, a_dot_x, trace.iterations, pair.converged, success)


def _thresholds(config: SweepConfig, beta_e: float) -> tuple[ThresholdReport | None, float | None]:
    if config.m < 3 or config.lam <= 0:
        return None, None
    params = NoiseModelParams(lam=config.lam, m=config.m, n=config.n, beta_e=beta_e)
    thm6 = thm6_alpha_min(params) if config.m % 2 == 0 else None
    return thm4_worst_case(params), thm6


def summarize(records: list[SweepRecord], config: SweepConfig, beta_e: float, beta_hat_tensor: float) -> SweepSummary:
    """Success fraction per alpha, over every trial and noise draw."""
    rows = []
    for alpha in config.alpha_grid:
        hits = [r.success for r in records if r.alpha == alpha]
        rows.append(SuccessRow(alpha, sum(hits) / len(hits) if hits else math.nan, len(hits)))
    thresholds, thm6 = _thresholds(config, beta_e)
    return SweepSummary(
        rows=rows,
        thresholds=thresholds,
        thm6_alpha_min=thm6,
        beta_hat_tensor=beta_hat_tensor,
        lambda_assumed=config.lambda_assumed,
    )


def run_sweep(config: SweepConfig) -> tuple[list[SweepRecord], SweepSummary]:
    """Run every (noise draw, alpha, trial) solve.

    Seeds are derived from (master_seed, noise_draw, alpha index, trial), so
    the records do not depend on the number of workers. Failed solves are
    recorded as non-converged and never stop the sweep.

    Returns:
        Records ordered by (noise_draw, alpha index, trial) and the summary.
    """
    workers = config.workers or get_settings().workers
    records: list[SweepRecord] = []
    beta_hat_tensor = math.nan
    for draw in range(config.noise_redraws):
        tensor = build_sweep_tensor(config, draw)
        if draw == 0:
            beta_hat_tensor = beta_hat(tensor)
        logger.info(
            "Noise draw %d: %d terms, %d alphas x %d starts",
            draw, tensor.noise.nnz, len(config.alpha_grid), config.starts_per_alpha,
        )
        tasks = [
            (alpha_index, trial)
            for alpha_index in range(len(config.alpha_grid))
            for trial in range(config.starts_per_alpha)
        ]
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                batch = list(pool.map(lambda task: _run_trial(tensor, config, draw, *task), tasks))
        else:
            batch = [_run_trial(tensor, config, draw, *task) for task in tasks]
        records.extend(batch)

    summary = summarize(records, config, config.beta_hat_target, beta_hat_tensor)
    logger.info("Sweep finished: %d records", len(records))
    return records, summary


def _read_key_values(path: Path) -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def load_sweep_config(path: str | Path | None = None, overrides: dict[str, Any] | None = None) -> SweepConfig:
    """Load a sweep config from a key = value or JSON file.

    Args:
        path: Config file; ``.json`` files are parsed as JSON, anything else
            as ``key = value`` lines with ``#`` comments. None uses defaults.
        overrides: Values that replace the file's (None entries are ignored).

    Raises:
        ConfigError: If the file is malformed or a value fails validation.
    """
    values: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        try:
            if path.suffix == ".json":
                values = json.loads(path.read_text())
            else:
                values = _read_key_values(path)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot read sweep config {path}: {e}") from e
        if not isinstance(values, dict):
            raise ConfigError(f"{path}: expected a mapping of settings")
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return SweepConfig.model_validate(values)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"]) or "config"
        raise ConfigError(f"Invalid sweep config: {field}: {first['msg']}") from e
