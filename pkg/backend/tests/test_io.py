"""Tests for the tensor and matrix text formats."""
import numpy as np
import pytest

from app.tensor.core import SymTensorSparse, contract
from app.tensor.io import TensorFormatError, read_matrices, read_tensor, write_matrices, write_tensor
from app.tensor.models import make_rank_one_plus_noise, random_sparse


@pytest.fixture
def rng():
    return np.random.default_rng(7)


class TestTensorFiles:
    """Tests for the symtensor format."""

    def test_written_file_uses_one_based_indices(self, tmp_path):
        """Header carries m, n and the term count; indices start at 1."""
        tensor = SymTensorSparse.from_terms(3, 2, [((0, 0, 1), 3.0)])
        path = write_tensor(tensor, tmp_path / "t.txt")
        assert path.read_text() == "symtensor 3 2 1\n1 1 2 3\n"

    def test_round_trip_is_exact(self, tmp_path, rng):
        """17 significant digits reproduce every value bit for bit."""
        tensor = random_sparse(5, 4, 20, rng)
        loaded = read_tensor(write_tensor(tensor, tmp_path / "t.txt"))
        assert loaded.terms() == tensor.terms()

    def test_structured_tensor_is_written_expanded(self, tmp_path, rng):
        """A planted tensor is stored as canonical terms with the same contraction."""
        tensor = make_rank_one_plus_noise(1.0, rng.standard_normal(3), random_sparse(3, 4, 4, rng))
        loaded = read_tensor(write_tensor(tensor, tmp_path / "t.txt"))
        x = rng.standard_normal(3)
        assert contract(loaded, x, 0) == pytest.approx(contract(tensor, x, 0), rel=1e-12, abs=1e-12)

    def test_blank_lines_are_ignored(self, tmp_path):
        """Empty lines carry no terms."""
        path = tmp_path / "t.txt"
        path.write_text("symtensor 2 2 1\n\n1 2 0.5\n\n")
        assert read_tensor(path).terms() == [((0, 1), 0.5)]

    @pytest.mark.parametrize(
        "content",
        [
            "",
            "tensor 3 2 1\n1 1 2 3\n",
            "symtensor 3 2 2\n1 1 2 3\n",
            "symtensor 3 2 1\n2 1 1 3\n",
            "symtensor 3 2 1\n1 1 3 3\n",
            "symtensor 3 2 1\n1 1 2\n",
            "symtensor 3 2 1\n1 1 2 abc\n",
            "symtensor 2 2 2\n1 2 1\n1 2 1\n",
        ],
        ids=["empty", "bad-keyword", "count", "decreasing", "range", "short-line", "bad-value", "duplicate"],
    )
    def test_malformed_files_are_rejected(self, tmp_path, content):
        """Every format violation raises TensorFormatError."""
        path = tmp_path / "bad.txt"
        path.write_text(content)
        with pytest.raises(TensorFormatError):
            read_tensor(path)


class TestMatrixFiles:
    """Tests for the matrices format."""

    def test_round_trip(self, tmp_path, rng):
        """Matrices come back in order with exact values."""
        mats = [rng.standard_normal((3, 3)) for _ in range(2)]
        loaded = read_matrices(write_matrices(mats, tmp_path / "m.txt"))
        assert len(loaded) == 2
        for got, want in zip(loaded, mats):
            np.testing.assert_array_equal(got, want)

    def test_row_count_mismatch(self, tmp_path):
        """The header fixes T * n rows."""
        path = tmp_path / "m.txt"
        path.write_text("matrices 2 2\n1 0\n0 1\n")
        with pytest.raises(TensorFormatError):
            read_matrices(path)

    def test_row_width_mismatch(self, tmp_path):
        """Each row has n values."""
        path = tmp_path / "m.txt"
        path.write_text("matrices 1 2\n1 0 0\n0 1\n")
        with pytest.raises(TensorFormatError):
            read_matrices(path)
