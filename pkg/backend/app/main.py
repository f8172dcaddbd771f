"""Command-line entry point: ``sshopm <command> [options]``."""
import argparse
import logging
import re
import sys

from pydantic import ValidationError

from app.experiments.commands import CommandNotFoundError, registry
from app.experiments.schemas import ErrorReport
from app.experiments.sweep import ConfigError
from app.settings import get_settings
from app.solver.bounds import BoundsError
from app.solver.sshopm import SolverError
from app.tensor.core import TensorError

logger = logging.getLogger(__name__)

DOMAIN_ERRORS = (
    TensorError,
    BoundsError,
    SolverError,
    ConfigError,
    ValidationError,
    CommandNotFoundError,
    OSError,
    ValueError,
)


def _add_seed(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="RNG seed (non-negative integer)")


def build_parser() -> argparse.ArgumentParser:
    """The argparse tree for every registered subcommand."""
    parser = argparse.ArgumentParser(prog="sshopm", description="SS-HOPM symmetric tensor toolkit")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="Find eigenpairs of a tensor file")
    solve.add_argument("tensor", help="Tensor file in symtensor format")
    solve.add_argument("--alpha", type=float, required=True, help="Shift parameter")
    solve.add_argument("--starts", type=int, default=1)
    solve.add_argument("--tol", type=float, default=1e-10)
    solve.add_argument("--max-iters", type=int, default=1000)
    solve.add_argument("--minimize", action="store_true", help="Seek local minima instead of maxima")
    solve.add_argument("--reference", help="Planted vector a for |a^T x|: comma-separated floats or e<k>")
    _add_seed(solve)

    bounds = sub.add_parser("bounds", help="Evaluate the perturbation bounds")
    bounds.add_argument("--lam", type=float, default=1.0)
    bounds.add_argument("--m", type=int, default=4)
    bounds.add_argument("--n", type=int, default=100)
    bounds.add_argument("--beta-e", type=float, default=0.03, help="Upper bound on beta(E)")
    bounds.add_argument("--epsilon", type=float, default=0.9)
    bounds.add_argument("--gamma", type=float, default=None, help="Start overlap; default 1/sqrt(n)")
    bounds.add_argument("--noise", help="Noise tensor file; sets m, n and beta_e = beta_hat(E)")
    bounds.add_argument("--samples", type=int, default=0, help="Sphere samples for a beta(E) bracket")
    _add_seed(bounds)

    sweep = sub.add_parser("sweep", help="Success rate versus alpha")
    sweep.add_argument("--config", default=None, help="key = value or .json sweep config")
    sweep.add_argument("--out-dir", default=".")
    sweep.add_argument("--workers", type=int, default=None)
    _add_seed(sweep)

    noise = sub.add_parser("gen-noise", help="Write a sparse symmetric noise tensor")
    noise.add_argument("--n", type=int, required=True)
    noise.add_argument("--m", type=int, required=True)
    noise.add_argument("--nnz-draws", type=int, default=500)
    noise.add_argument("--beta-hat", type=float, default=0.03)
    noise.add_argument("--lam", type=float, default=None, help="Add lam * e1^(x)m to the noise")
    noise.add_argument("--out", required=True)
    _add_seed(noise)

    tvca2 = sub.add_parser("tvca2", help="Build the quartic tensor of a covariance matrix file")
    tvca2.add_argument("matrices", help="File in 'matrices T n' format")
    tvca2.add_argument("--out", required=True)
    _add_seed(tvca2)

    return parser


def _configure_logging(verbose: int) -> None:
    level = get_settings().log_level
    if verbose == 1:
        level = "INFO"
    elif verbose >= 2:
        level = "DEBUG"
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def _error_code(exc: Exception) -> str:
    # DensifyBudgetError -> densify_budget_error
    return re.sub(r"(?<!^)(?=[A-Z])", "_", type(exc).__name__).lower()


def main(argv: list[str] | None = None) -> int:
    """Parse arguments and run one subcommand.

    Returns:
        0 on success, 1 on a domain error (JSON error object on stderr),
        2 on a usage error.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    _configure_logging(args.verbose)
    try:
        return registry.invoke(args.command, args)
    except DOMAIN_ERRORS as e:
        logger.debug("Command %s failed", args.command, exc_info=True)
        print(ErrorReport(error=_error_code(e), detail=str(e)).model_dump_json(), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
