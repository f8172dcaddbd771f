"""Text file formats for symmetric tensors and covariance matrix sets.

Tensor files::

    symtensor m n k
    i1 i2 ... im value        (k lines, 1-based non-decreasing indices)

Matrix files::

    matrices T n
    <T blocks of n rows with n decimals each>

Values are written with 17 significant digits so a write/read cycle is exact.
"""
import logging
from pathlib import Path

import numpy as np

from app.tensor.core import SymTensorSparse, Tensor, TensorError, to_sparse

logger = logging.getLogger(__name__)

TENSOR_HEADER = "symtensor"
MATRICES_HEADER = "matrices"


class TensorFormatError(TensorError):
    """Raised when a tensor or matrix file does not follow its format."""
    pass


def format_value(value: float) -> str:
    """Shortest-safe decimal for a float: 17 significant digits."""
    return format(float(value), ".17g")


def _content_lines(path: Path) -> list[tuple[int, str]]:
    lines = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if line:
            lines.append((lineno, line))
    return lines


def _parse_header(lines: list[tuple[int, str]], keyword: str, fields: int, path: Path) -> list[int]:
    if not lines:
        raise TensorFormatError(f"{path}: empty file")
    lineno, header = lines[0]
    parts = header.split()
    if len(parts) != fields + 1 or parts[0] != keyword:
        raise TensorFormatError(f"{path}:{lineno}: expected '{keyword}' header with {fields} integers")
    try:
        return [int(p) for p in parts[1:]]
    except ValueError as e:
        raise TensorFormatError(f"{path}:{lineno}: {e}") from e


def write_tensor(tensor: Tensor, path: str | Path) -> Path:
    """Write a tensor in canonical sparse form.

    Args:
        tensor: Any representation; dense and structured tensors are
            converted with ``to_sparse`` first.
        path: Destination file.

    Returns:
        The written path.
    """
    sparse = to_sparse(tensor)
    path = Path(path)
    out = [f"{TENSOR_HEADER} {sparse.m} {sparse.n} {sparse.nnz}"]
    for index, value in sparse.terms():
        out.append(" ".join(str(i + 1) for i in index) + " " + format_value(value))
    path.write_text("\n".join(out) + "\n")
    logger.debug("Wrote %d canonical terms to %s", sparse.nnz, path)
    return path


def read_tensor(path: str | Path) -> SymTensorSparse:
    """Read a tensor file into canonical sparse form.

    Raises:
        TensorFormatError: On a malformed header or term line, a term count
            that does not match the header, or decreasing indices.
    """
    path = Path(path)
    lines = _content_lines(path)
    m, n, k = _parse_header(lines, TENSOR_HEADER, 3, path)
    body = lines[1:]
    if len(body) != k:
        raise TensorFormatError(f"{path}: header declares {k} terms, found {len(body)}")

    terms = []
    for lineno, line in body:
        parts = line.split()
        if len(parts) != m + 1:
            raise TensorFormatError(f"{path}:{lineno}: expected {m} indices and a value")
        try:
            index = tuple(int(p) - 1 for p in parts[:m])
            value = float(parts[m])
        except ValueError as e:
            raise TensorFormatError(f"{path}:{lineno}: {e}") from e
        if any(b < a for a, b in zip(index, index[1:])):
            raise TensorFormatError(f"{path}:{lineno}: indices must be non-decreasing")
        if min(index) < 0 or max(index) >= n:
            raise TensorFormatError(f"{path}:{lineno}: index out of range 1..{n}")
        terms.append((index, value))
    try:
        return SymTensorSparse.from_terms(m, n, terms)
    except TensorError as e:
        raise TensorFormatError(f"{path}: {e}") from e


def write_matrices(matrices: list[np.ndarray], path: str | Path) -> Path:
    """Write a list of n x n matrices in the ``matrices T n`` format."""
    path = Path(path)
    n = matrices[0].shape[0] if matrices else 0
    out = [f"{MATRICES_HEADER} {len(matrices)} {n}"]
    for matrix in matrices:
        for row in np.asarray(matrix, dtype=float):
            out.append(" ".join(format_value(v) for v in row))
        out.append("")
    path.write_text("\n".join(out))
    return path


def read_matrices(path: str | Path) -> list[np.ndarray]:
    """Read T blocks of n x n decimals; blank lines between blocks are optional."""
    path = Path(path)
    lines = _content_lines(path)
    count, n = _parse_header(lines, MATRICES_HEADER, 2, path)
    body = lines[1:]
    if len(body) != count * n:
        raise TensorFormatError(f"{path}: expected {count * n} matrix rows, found {len(body)}")

    rows = []
    for lineno, line in body:
        try:
            row = [float(p) for p in line.split()]
        except ValueError as e:
            raise TensorFormatError(f"{path}:{lineno}: {e}") from e
        if len(row) != n:
            raise TensorFormatError(f"{path}:{lineno}: expected {n} values, found {len(row)}")
        rows.append(row)
    data = np.array(rows, dtype=float).reshape(count, n, n)
    return [data[t] for t in range(count)]
