"""Tests for symmetric tensor representations and contraction."""
import itertools

import numpy as np
import pytest

from app.tensor.core import (
    DensifyBudgetError,
    DimensionMismatchError,
    ModeError,
    NotUnitVectorError,
    RankOnePlusNoise,
    SymmetryError,
    SymTensorDense,
    SymTensorSparse,
    add,
    beta_estimate,
    beta_hat,
    canonical_index,
    contract,
    densify,
    gradient,
    hessian,
    negate,
    orbit_size,
    rayleigh,
    sparsify,
    to_sparse,
)
from app.tensor.models import make_rank_one, make_rank_one_plus_noise, random_sparse, random_symmetric_dense
from app.tensor.oracle import fd_gradient, fd_hessian, naive_contract


def unit(rng: np.random.Generator, n: int) -> np.ndarray:
    x = rng.standard_normal(n)
    return x / np.linalg.norm(x)


def e(n: int, i: int) -> np.ndarray:
    vec = np.zeros(n)
    vec[i] = 1.0
    return vec


@pytest.fixture
def rng():
    return np.random.default_rng(42)


class TestIndexHelpers:
    """Tests for canonical indices and orbit sizes."""

    def test_orbit_sizes(self):
        """Orbit size is m! over the product of multiplicity factorials."""
        assert orbit_size((0, 0, 1)) == 3
        assert orbit_size((0, 1, 2)) == 6
        assert orbit_size((1, 1, 1, 1)) == 1
        assert orbit_size((0, 0, 1, 1)) == 6

    def test_canonical_index_sorts(self):
        """Any ordering maps to the sorted representative."""
        assert canonical_index((2, 0, 1, 0)) == (0, 0, 1, 2)


class TestConstruction:
    """Tests for representation invariants."""

    def test_dense_rejects_asymmetric_entries(self):
        """A non-symmetric matrix is not a symmetric tensor."""
        with pytest.raises(SymmetryError):
            SymTensorDense(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_dense_rejects_non_square_shape(self):
        """Every mode must share one dimension."""
        with pytest.raises(DimensionMismatchError):
            SymTensorDense(np.zeros((2, 3)))

    def test_dense_rejects_one_mode(self):
        """Vectors are not tensors in this sense."""
        with pytest.raises(ModeError):
            SymTensorDense(np.zeros(3))

    def test_sparse_rejects_unsorted_tuple(self):
        """Stored tuples must be canonical."""
        with pytest.raises(SymmetryError):
            SymTensorSparse(m=3, n=2, indices=[[1, 0, 0]], values=[1.0])

    def test_sparse_rejects_duplicate_tuples(self):
        """One entry per permutation orbit."""
        with pytest.raises(SymmetryError):
            SymTensorSparse(m=3, n=2, indices=[[0, 0, 1], [0, 0, 1]], values=[1.0, 2.0])

    def test_from_terms_canonicalizes(self):
        """from_terms sorts each tuple before storing it."""
        tensor = SymTensorSparse.from_terms(3, 2, [((1, 0, 0), 2.5)])
        assert tensor.terms() == [((0, 0, 1), 2.5)]

    def test_from_terms_duplicate_orbit_raises_by_default(self):
        """Two tuples in one orbit are an error unless a merge rule is given."""
        terms = [((1, 0, 0), 1.0), ((0, 1, 0), 2.0)]
        with pytest.raises(SymmetryError):
            SymTensorSparse.from_terms(3, 2, terms)
        assert SymTensorSparse.from_terms(3, 2, terms, merge="first").values.tolist() == [1.0]
        assert SymTensorSparse.from_terms(3, 2, terms, merge="sum").values.tolist() == [3.0]

    def test_rank_one_plus_noise_requires_unit_a(self):
        """The planted vector must be normalized."""
        with pytest.raises(NotUnitVectorError):
            RankOnePlusNoise(lam=1.0, a=np.array([2.0, 0.0]), noise=SymTensorSparse.zeros(3, 2))

    def test_tensors_are_immutable(self):
        """Stored arrays cannot be written."""
        tensor = SymTensorSparse.from_terms(2, 2, [((0, 1), 1.0)])
        with pytest.raises(ValueError):
            tensor.values[0] = 5.0


class TestContract:
    """Tests for the m-r product."""

    def test_rank_one_at_planted_vector(self):
        """e1^(x)3 contracted fully against e1 is 1."""
        tensor = make_rank_one(1.0, e(3, 0), 3)
        assert contract(tensor, e(3, 0), 0) == pytest.approx(1.0)

    def test_rank_one_identity_random_cases(self, rng):
        """(a^(x)m) x^(m-r) equals (a^T x)^(m-r) a^(x)r on 500 random cases."""
        for _ in range(500):
            n = int(rng.integers(2, 5))
            m = int(rng.choice([3, 4, 5]))
            r = int(rng.choice([0, 1, 2]))
            tensor = make_rank_one(1.0, rng.standard_normal(n), m)
            a = tensor.a
            x = rng.standard_normal(n)
            expected = (a @ x) ** (m - r)
            if r == 1:
                expected = expected * a
            elif r == 2:
                expected = expected * np.outer(a, a)
            for form in (tensor, densify(tensor)):
                np.testing.assert_allclose(contract(form, x, r), expected, rtol=1e-10, atol=1e-12)

    def test_sparse_matches_naive_summation(self, rng):
        """Symmetric-aware contraction agrees with the nested-sum oracle on 200 instances."""
        for _ in range(200):
            n = int(rng.integers(1, 6))
            m = int(rng.integers(2, 5))
            r = int(rng.integers(0, min(m, 2) + 1))
            tensor = random_sparse(n, m, int(rng.integers(1, 8)), rng)
            x = unit(rng, n)
            expected = naive_contract(densify(tensor), x, r)
            scale = max(1.0, tensor.abs_entry_sum())
            np.testing.assert_allclose(contract(tensor, x, r), expected, rtol=1e-12, atol=1e-12 * scale)

    def test_dense_matches_naive_summation(self, rng):
        """Dense contraction agrees with the nested-sum oracle."""
        for _ in range(50):
            n = int(rng.integers(1, 5))
            m = int(rng.integers(2, 5))
            r = int(rng.integers(0, min(m, 2) + 1))
            tensor = random_symmetric_dense(n, m, rng)
            x = rng.standard_normal(n)
            scale = max(1.0, float(np.abs(tensor.entries).sum())) * max(1.0, float(np.abs(x).max())) ** m
            np.testing.assert_allclose(
                contract(tensor, x, r), naive_contract(tensor, x, r), rtol=1e-12, atol=1e-12 * scale
            )

    def test_structured_matches_dense(self, rng):
        """lam a^(x)m + E contracts like its dense materialization."""
        noise = random_sparse(4, 4, 5, rng)
        tensor = make_rank_one_plus_noise(1.5, rng.standard_normal(4), noise)
        dense = densify(tensor)
        x = rng.standard_normal(4)
        for r in (0, 1, 2):
            np.testing.assert_allclose(contract(tensor, x, r), contract(dense, x, r), rtol=1e-12, atol=1e-12)

    def test_matrix_result_is_symmetric(self, rng):
        """r = 2 returns a symmetric matrix."""
        tensor = random_sparse(5, 4, 10, rng)
        mat = contract(tensor, rng.standard_normal(5), 2)
        np.testing.assert_allclose(mat, mat.T, atol=1e-12)

    def test_linearity(self, rng):
        """Contraction of a sum is the sum of contractions."""
        left = random_sparse(3, 4, 6, rng)
        right = random_sparse(3, 4, 6, rng)
        planted = make_rank_one_plus_noise(0.7, rng.standard_normal(3), left)
        x = rng.standard_normal(3)
        for r in (0, 1, 2):
            for a_term, b_term in ((left, right), (planted, right), (densify(left), right)):
                np.testing.assert_allclose(
                    contract(add(a_term, b_term), x, r),
                    contract(a_term, x, r) + contract(b_term, x, r),
                    rtol=1e-12,
                    atol=1e-12,
                )

    def test_add_keeps_representation(self, rng):
        """Sparse + sparse stays sparse and noise added to a planted tensor stays structured."""
        left = random_sparse(3, 3, 4, rng)
        right = random_sparse(3, 3, 4, rng)
        assert isinstance(left + right, SymTensorSparse)
        planted = make_rank_one_plus_noise(1.0, e(3, 0), left)
        assert isinstance(planted + right, RankOnePlusNoise)
        assert isinstance(densify(left) + right, SymTensorDense)

    def test_dimension_mismatch(self):
        """x must have dimension n."""
        tensor = make_rank_one(1.0, e(3, 0), 3)
        with pytest.raises(DimensionMismatchError):
            contract(tensor, np.ones(4), 1)

    def test_unsupported_order(self):
        """Only r in {0, 1, 2} is supported."""
        tensor = make_rank_one(1.0, e(3, 0), 3)
        with pytest.raises(ModeError):
            contract(tensor, e(3, 0), 3)

    def test_add_rejects_mismatched_shapes(self):
        """Tensors of different order cannot be added."""
        with pytest.raises(DimensionMismatchError):
            add(SymTensorSparse.zeros(3, 2), SymTensorSparse.zeros(4, 2))


class TestRayleigh:
    """Tests for the generalized Rayleigh quotient."""

    def test_planted_eigenpair(self):
        """lam a^(x)m at x = a gives lam."""
        a = np.array([0.6, 0.8, 0.0])
        assert rayleigh(make_rank_one(2.5, a, 4), a) == pytest.approx(2.5)

    def test_zero_tensor(self, rng):
        """The zero tensor has quotient 0 everywhere."""
        assert rayleigh(SymTensorSparse.zeros(4, 3), unit(rng, 3)) == 0.0

    def test_matches_oracle_on_dense(self, rng):
        """n = 3, m = 4 random dense tensor against the nested sum."""
        tensor = random_symmetric_dense(3, 4, rng)
        x = unit(rng, 3)
        assert rayleigh(tensor, x) == pytest.approx(naive_contract(tensor, x, 0), rel=1e-12)

    def test_rejects_non_unit_vector(self):
        """Callers must normalize."""
        tensor = make_rank_one(1.0, e(2, 0), 3)
        with pytest.raises(NotUnitVectorError):
            rayleigh(tensor, np.array([1.0, 1.0]))

    def test_bounded_by_beta_hat(self, rng):
        """|A x^m| < beta_hat / (m-1) at random unit x."""
        for _ in range(50):
            m = int(rng.choice([3, 4]))
            tensor = random_sparse(4, m, 6, rng)
            assert abs(rayleigh(tensor, unit(rng, 4))) < beta_hat(tensor) / (m - 1)


class TestDerivatives:
    """Tests for gradient and Hessian against finite differences."""

    def test_quadratic_gradient(self, rng):
        """For m = 2 the gradient is 2 A x."""
        tensor = random_symmetric_dense(4, 2, rng)
        x = rng.standard_normal(4)
        np.testing.assert_allclose(gradient(tensor, x), 2.0 * tensor.entries @ x, rtol=1e-12)
        np.testing.assert_allclose(fd_gradient(tensor, x), 2.0 * tensor.entries @ x, atol=1e-8)

    def test_gradient_matches_central_differences(self, rng):
        """50 random n = 4, m = 4 tensors, abs error <= 1e-6."""
        for _ in range(50):
            tensor = random_symmetric_dense(4, 4, rng)
            x = unit(rng, 4)
            np.testing.assert_allclose(gradient(tensor, x), fd_gradient(tensor, x, 1e-5), atol=1e-6)

    def test_gradient_third_order(self, rng):
        """Random m = 3 sparse tensor, abs error <= 1e-6."""
        tensor = random_sparse(4, 3, 8, rng)
        x = unit(rng, 4)
        np.testing.assert_allclose(gradient(tensor, x), fd_gradient(tensor, x, 1e-5), atol=1e-6)

    def test_hessian_matches_second_differences(self, rng):
        """50 random n = 4, m = 4 tensors, abs error <= 1e-4."""
        for _ in range(50):
            tensor = random_symmetric_dense(4, 4, rng)
            x = unit(rng, 4)
            np.testing.assert_allclose(hessian(tensor, x), fd_hessian(tensor, x, 1e-4), atol=1e-4)


class TestDensify:
    """Tests for materialization and its inverse."""

    def test_single_term_is_copied_to_its_orbit(self):
        """Term (1,1,2) = 3 fills every permutation and nothing else."""
        dense = densify(SymTensorSparse.from_terms(3, 2, [((0, 0, 1), 3.0)]))
        for index in itertools.product(range(2), repeat=3):
            expected = 3.0 if sorted(index) == [0, 0, 1] else 0.0
            assert dense.entries[index] == expected

    def test_planted_term_only(self):
        """lam = 2, a = e2 gives a single nonzero 2 at (2,2,2)."""
        dense = densify(make_rank_one(2.0, e(2, 1), 3))
        expected = np.zeros((2, 2, 2))
        expected[1, 1, 1] = 2.0
        np.testing.assert_array_equal(dense.entries, expected)

    def test_sparsify_inverts_densify(self, rng):
        """Canonical terms survive a densify/sparsify cycle exactly."""
        tensor = random_sparse(4, 4, 12, rng)
        assert sparsify(densify(tensor)).terms() == tensor.terms()

    def test_permutation_invariance_is_exact(self, rng):
        """Every permutation of a tuple holds the same bits."""
        dense = densify(make_rank_one_plus_noise(1.3, rng.standard_normal(3), random_sparse(3, 4, 5, rng)))
        for index in itertools.product(range(3), repeat=4):
            for perm in itertools.permutations(index):
                assert dense.entries[perm] == dense.entries[index]

    def test_budget_is_enforced(self):
        """n = 100, m = 4 must never be materialized."""
        with pytest.raises(DensifyBudgetError):
            densify(SymTensorSparse.zeros(4, 100))

    def test_to_sparse_expands_planted_term(self, rng):
        """The structured form and its sparse expansion agree."""
        tensor = make_rank_one_plus_noise(0.8, rng.standard_normal(3), random_sparse(3, 3, 4, rng))
        x = rng.standard_normal(3)
        assert contract(to_sparse(tensor), x, 0) == pytest.approx(contract(tensor, x, 0), rel=1e-12, abs=1e-12)


class TestBetaHat:
    """Tests for the crude bound and the sampled bracket."""

    def test_zero_tensor(self):
        """Zero tensor has beta_hat 0."""
        assert beta_hat(SymTensorSparse.zeros(4, 5)) == 0.0

    def test_single_entry_rank_one(self):
        """e1^(x)4 has one entry of 1, so beta_hat = 3."""
        assert beta_hat(make_rank_one(1.0, e(5, 0), 4)) == pytest.approx(3.0)

    def test_orbit_weighting(self):
        """A term with a 3-element orbit counts three times."""
        tensor = SymTensorSparse.from_terms(3, 2, [((0, 0, 1), -1.0)])
        assert beta_hat(tensor) == pytest.approx(6.0)
        assert beta_hat(densify(tensor)) == pytest.approx(6.0)

    def test_negate_keeps_beta_hat(self, rng):
        """beta_hat depends on magnitudes only."""
        tensor = random_sparse(3, 4, 5, rng)
        assert beta_hat(negate(tensor)) == pytest.approx(beta_hat(tensor))

    @pytest.mark.parametrize("n,m,lam", [(4, 3, 1.0), (5, 4, -0.7), (6, 4, 2.5), (3, 5, 1.3)])
    def test_structured_matches_densified(self, rng, n, m, lam):
        """The planted-plus-noise bound agrees with summing the dense entries."""
        noise = random_sparse(n, m, 6, rng)
        tensor = make_rank_one_plus_noise(lam, rng.standard_normal(n), noise)
        assert beta_hat(tensor) == pytest.approx(beta_hat(densify(tensor)), rel=1e-12)

    def test_structured_noise_cancels_planted_entry(self):
        """A noise term equal to -lam * a_i...a_l zeroes that orbit."""
        a = np.array([0.6, 0.8])
        noise = SymTensorSparse.from_terms(4, 2, [((0, 0, 1, 1), -(0.6**2) * (0.8**2))])
        tensor = make_rank_one_plus_noise(1.0, a, noise)
        assert beta_hat(tensor) == pytest.approx(beta_hat(densify(tensor)), rel=1e-12)
        assert beta_hat(tensor) == pytest.approx(3 * (1.4**4 - 6 * 0.6**2 * 0.8**2))

    def test_structured_with_dense_planted_vector(self, rng):
        """n = 100, m = 4 with a dense a stays within the triangle inequality."""
        noise = random_sparse(100, 4, 500, rng)
        a = unit(rng, 100)
        value = beta_hat(make_rank_one_plus_noise(1.0, a, noise))
        planted = 3 * float(np.sum(np.abs(a))) ** 4
        assert abs(value - planted) <= beta_hat(noise) * (1 + 1e-12)
        assert noise._plans == {}

    def test_estimate_for_rank_one(self):
        """The planted direction is sampled, so the lower end reaches (m-1) lam."""
        lower, upper = beta_estimate(make_rank_one(1.0, e(6, 0), 4), samples=20, seed=1)
        assert lower >= 2.9
        assert lower <= upper + 1e-12

    def test_estimate_for_zero_tensor(self):
        """Zero tensor gives (0, 0)."""
        assert beta_estimate(SymTensorSparse.zeros(4, 3), samples=10, seed=0) == (0.0, 0.0)

    def test_estimate_is_ordered(self, rng):
        """Sampled lower end never exceeds the crude bound."""
        for seed in range(10):
            tensor = random_sparse(4, 4, 6, rng)
            lower, upper = beta_estimate(tensor, samples=50, seed=seed)
            assert lower <= upper + 1e-12
