"""Subcommand registry and handlers for the ``sshopm`` command line."""
import argparse
import logging
from pathlib import Path
from typing import Callable

import numpy as np

from app.experiments.artifacts import emit_csv, emit_plot, emit_summary_csv
from app.experiments.schemas import EigenPairReport, SweepSummaryReport, TensorFileReport
from app.experiments.sweep import load_sweep_config, run_sweep
from app.solver.bounds import NoiseModelParams, theorem_summary
from app.solver.sshopm import SolverError, SshopmConfig, sshopm_solve, start_vectors
from app.tensor.core import TensorError, beta_estimate, beta_hat
from app.tensor.io import read_matrices, read_tensor, write_tensor
from app.tensor.models import NoiseGenSpec, Tvca2Input, build_tvca2, gen_sparse_noise, make_rank_one_plus_noise

logger = logging.getLogger(__name__)


class CommandNotFoundError(Exception):
    """Raised when a requested subcommand is not registered."""
    pass


CommandFunc = Callable[[argparse.Namespace], int]


class CommandRegistry:
    """In-process registry of subcommand handlers."""

    def __init__(self) -> None:
        self._commands: dict[str, CommandFunc] = {}

    def register(self, name: str) -> Callable[[CommandFunc], CommandFunc]:
        """Decorator to register a handler under a subcommand name.

        Args:
            name: The subcommand name.

        Returns:
            A decorator function.
        """
        def decorator(func: CommandFunc) -> CommandFunc:
            self._commands[name] = func
            return func
        return decorator

    def invoke(self, name: str, args: argparse.Namespace) -> int:
        """Run a registered handler.

        Returns:
            The handler's exit code.

        Raises:
            CommandNotFoundError: If the command is not registered.
        """
        if name not in self._commands:
            raise CommandNotFoundError(f"Command '{name}' not found")
        return self._commands[name](args)

    def list_commands(self) -> list[str]:
        return list(self._commands.keys())


# Global registry instance
registry = CommandRegistry()


def parse_vector(text: str, n: int) -> np.ndarray:
    """Comma-separated floats, normalized to unit length.

    ``e<k>`` is shorthand for the k-th standard basis vector (1-based).

    Raises:
        TensorError: If the vector has the wrong length or is zero.
    """
    shorthand = text.strip()
    if shorthand.startswith("e") and shorthand[1:].isdigit():
        k = int(shorthand[1:])
        if not 1 <= k <= n:
            raise TensorError(f"Basis vector {shorthand} is out of range for n={n}")
        vec = np.zeros(n)
        vec[k - 1] = 1.0
        return vec
    try:
        vec = np.array([float(p) for p in text.split(",")], dtype=float)
    except ValueError as e:
        raise TensorError(f"Cannot parse vector {text!r}: {e}") from e
    if vec.shape[0] != n:
        raise TensorError(f"Reference vector has {vec.shape[0]} entries, tensor has n={n}")
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise TensorError("Reference vector must be nonzero")
    return vec / norm


@registry.register("solve")
def solve_command(args: argparse.Namespace) -> int:
    """Run SS-HOPM from ``--starts`` random starts and print one JSON line per start.

    A start that hits a degenerate step is reported with an ``error`` field;
    the remaining starts still run.
    """
    tensor = read_tensor(args.tensor)
    reference = parse_vector(args.reference, tensor.n) if args.reference else None
    config = SshopmConfig(
        alpha=args.alpha,
        tol=args.tol,
        max_iters=args.max_iters,
        seed=args.seed,
        find_minimum=args.minimize,
    )
    for start, x0 in enumerate(start_vectors(tensor.n, args.starts, args.seed)):
        try:
            pair, trace = sshopm_solve(tensor, config, x0=x0, ground_truth=reference)
        except SolverError as e:
            logger.warning("Start %d failed: %s", start, e)
            print(EigenPairReport(start=start, error=str(e)).model_dump_json(by_alias=True))
            continue
        a_dot_x = float(reference @ pair.x) if reference is not None else None
        report = EigenPairReport.from_solve(start, pair, trace, a_dot_x)
        print(report.model_dump_json(by_alias=True))
    return 0


@registry.register("bounds")
def bounds_command(args: argparse.Namespace) -> int:
    """Print every theorem value for the given model parameters as JSON.

    With ``--noise`` the dimensions and beta_e come from a noise tensor file
    (beta_e = beta_hat(E)), and ``--samples`` adds a sampled bracket on beta(E).
    """
    m, n, beta_e = args.m, args.n, args.beta_e
    bracket = None
    if args.noise:
        noise = read_tensor(args.noise)
        m, n, beta_e = noise.m, noise.n, beta_hat(noise)
        if args.samples:
            bracket = beta_estimate(noise, args.samples, args.seed)
    params = NoiseModelParams(lam=args.lam, m=m, n=n, beta_e=beta_e)
    report = theorem_summary(params, epsilon=args.epsilon, gamma=args.gamma)
    if bracket is not None:
        report = report.model_copy(update={"beta_estimate": bracket})
    print(report.model_dump_json(by_alias=True, indent=2))
    return 0


@registry.register("sweep")
def sweep_command(args: argparse.Namespace) -> int:
    """Run the shift-parameter sweep and write sweep.csv, sweep_summary.csv and sweep.svg."""
    config = load_sweep_config(
        args.config,
        overrides={"master_seed": args.seed, "workers": args.workers},
    )
    if config.lambda_assumed:
        logger.warning("lambda not set; assuming lambda = 1")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    records, summary = run_sweep(config)
    csv_path = emit_csv(records, out_dir / "sweep.csv")
    summary_path = emit_summary_csv(summary, out_dir / "sweep_summary.csv")
    plot_path = emit_plot(summary, out_dir / "sweep.svg")
    report = SweepSummaryReport.from_summary(
        summary, len(records), str(csv_path), str(summary_path), str(plot_path)
    )
    print(report.model_dump_json(indent=2))
    return 0


@registry.register("gen-noise")
def gen_noise_command(args: argparse.Namespace) -> int:
    """Write a sparse noise tensor E, or lam * e1^(x)m + E with ``--lam``."""
    spec = NoiseGenSpec(
        n=args.n,
        m=args.m,
        nnz_draws=args.nnz_draws,
        beta_hat_target=args.beta_hat,
        seed=args.seed,
    )
    tensor = gen_sparse_noise(spec)
    if args.lam is not None:
        planted = np.zeros(args.n)
        planted[0] = 1.0
        tensor = make_rank_one_plus_noise(args.lam, planted, tensor)
    path = write_tensor(tensor, args.out)
    written = read_tensor(path)
    report = TensorFileReport(path=str(path), m=written.m, n=written.n, terms=written.nnz, beta_hat=beta_hat(written))
    print(report.model_dump_json())
    return 0


@registry.register("tvca2")
def tvca2_command(args: argparse.Namespace) -> int:
    """Build the degree-4 tensor of a covariance matrix file and write it."""
    tensor = build_tvca2(Tvca2Input(matrices=tuple(read_matrices(args.matrices))))
    path = write_tensor(tensor, args.out)
    written = read_tensor(path)
    report = TensorFileReport(path=str(path), m=written.m, n=written.n, terms=written.nnz, beta_hat=beta_hat(written))
    print(report.model_dump_json())
    return 0
