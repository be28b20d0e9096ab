import numpy as np
import pytest

from iminr.codes import (
    CodeBook,
    VariationalCode,
    compose_code,
    compose_code_backward,
    kl_divergence,
    kl_divergence_gradients,
    sample_code,
    sample_code_backward,
)
from iminr.errors import DimensionMismatch, UnknownSequence

from helpers import central_difference, max_relative_error


class TestSampleCode:
    def test_zero_noise_returns_mean(self):
        vc = VariationalCode(np.array([1.0, -2.0]), np.array([0.3, -0.7]))
        np.testing.assert_array_equal(sample_code(vc, np.zeros(2)), vc.mean)

    def test_unit_sigma_adds_noise(self):
        vc = VariationalCode(np.array([1.0, 2.0]), np.zeros(2))
        n = np.array([0.5, -1.5])
        np.testing.assert_allclose(sample_code(vc, n), vc.mean + n, atol=1e-15)

    def test_monte_carlo_mean(self):
        rng = np.random.default_rng(77)
        vc = VariationalCode(np.array([0.4, -1.1, 2.0]), np.array([0.0, 1.0, -1.0]))
        n = 100_000
        draws = np.stack([sample_code(vc, rng.normal(size=3)) for _ in range(n)])
        sigma = np.exp(0.5 * vc.log_variance)
        tol = 4.0 * sigma / np.sqrt(n)
        assert np.all(np.abs(draws.mean(axis=0) - vc.mean) < tol)

    def test_dimension_mismatch(self):
        vc = VariationalCode(np.zeros(3), np.zeros(3))
        with pytest.raises(DimensionMismatch):
            sample_code(vc, np.zeros(4))

    def test_backward_matches_finite_differences(self):
        rng = np.random.default_rng(5)
        mean = rng.normal(size=4)
        lv = rng.normal(size=4)
        noise = rng.normal(size=4)
        probe = rng.normal(size=4)

        d_mean, d_lv = sample_code_backward(VariationalCode(mean, lv), noise, probe)

        def wrt_mean(m):
            return float(probe @ sample_code(VariationalCode(m, lv), noise))

        def wrt_lv(v):
            return float(probe @ sample_code(VariationalCode(mean, v), noise))

        assert max_relative_error(d_mean, central_difference(wrt_mean, mean)) < 1e-6
        assert max_relative_error(d_lv, central_difference(wrt_lv, lv)) < 1e-6


class TestKlDivergence:
    def test_standard_normal_is_zero(self):
        vc = VariationalCode(np.zeros(4), np.zeros(4))
        assert kl_divergence(vc) == 0.0

    def test_unit_mean_one_dim(self):
        vc = VariationalCode(np.array([1.0]), np.array([0.0]))
        assert abs(kl_divergence(vc) - 0.5) < 1e-15

    def test_variance_four_one_dim(self):
        vc = VariationalCode(np.array([0.0]), np.array([np.log(4.0)]))
        expected = 0.5 * (4.0 - 1.0 - np.log(4.0))
        assert abs(kl_divergence(vc) - expected) < 1e-12
        assert abs(expected - 0.80685) < 5e-6

    def test_nonnegative_and_zero_only_at_standard_normal(self):
        rng = np.random.default_rng(13)
        for _ in range(200):
            vc = VariationalCode(rng.normal(size=3), rng.normal(size=3))
            kl = kl_divergence(vc)
            assert kl >= 0.0
            if kl == 0.0:
                assert np.all(vc.mean == 0) and np.all(vc.log_variance == 0)

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(21)
        mean = rng.normal(size=5)
        lv = rng.normal(size=5)
        d_mean, d_lv = kl_divergence_gradients(VariationalCode(mean, lv))

        def wrt_mean(m):
            return kl_divergence(VariationalCode(m, lv))

        def wrt_lv(v):
            return kl_divergence(VariationalCode(mean, v))

        assert max_relative_error(d_mean, central_difference(wrt_mean, mean)) < 1e-6
        assert max_relative_error(d_lv, central_difference(wrt_lv, lv)) < 1e-6


class TestComposeCode:
    def test_concat_keeps_alpha_first(self):
        out = compose_code(np.array([1.0, 2.0]), np.array([3.0, 4.0, 5.0]), "concat")
        np.testing.assert_array_equal(out, [1, 2, 3, 4, 5])

    def test_add_identity(self):
        a = np.array([1.0, -2.0])
        np.testing.assert_array_equal(compose_code(a, np.zeros(2), "add"), a)

    def test_add_arithmetic(self):
        out = compose_code(np.array([1.0, 2.0]), np.array([3.0, 4.0]), "add")
        np.testing.assert_array_equal(out, [4.0, 6.0])

    def test_add_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            compose_code(np.zeros(2), np.zeros(3), "add")

    def test_backward_splits_concat(self):
        g = np.arange(5.0)
        ga, gb = compose_code_backward(g, "concat", 2)
        np.testing.assert_array_equal(ga, [0, 1])
        np.testing.assert_array_equal(gb, [2, 3, 4])

    def test_backward_duplicates_add(self):
        g = np.arange(3.0)
        ga, gb = compose_code_backward(g, "add", 3)
        np.testing.assert_array_equal(ga, g)
        np.testing.assert_array_equal(gb, g)


class TestCodeBook:
    def test_initialize_creates_one_code_per_id_and_action(self):
        book = CodeBook.initialize(["a", "b"], [0, 1, 2], beta_dim=4, alpha_dim=3)
        assert set(book.sequence_codes) == {"a", "b"}
        assert set(book.action_codes) == {0, 1, 2}
        assert book.beta_dim == 4 and book.alpha_dim == 3 and book.code_dim == 7

    def test_default_init_logvar_is_one(self):
        book = CodeBook.initialize(["a"], [0], beta_dim=2, alpha_dim=2)
        np.testing.assert_array_equal(book.sequence_codes["a"].log_variance, [1.0, 1.0])
        np.testing.assert_array_equal(book.sequence_codes["a"].mean, [0.0, 0.0])

    def test_independent_alpha_beta_draws_have_zero_cross_covariance(self):
        rng = np.random.default_rng(3)
        alpha = VariationalCode(np.zeros(2), np.zeros(2))
        beta = VariationalCode(np.zeros(2), np.zeros(2))
        n = 20_000
        xs = np.stack(
            [
                compose_code(
                    sample_code(alpha, rng.normal(size=2)),
                    sample_code(beta, rng.normal(size=2)),
                    "concat",
                )
                for _ in range(n)
            ]
        )
        cov = np.cov(xs, rowvar=False)
        cross = cov[:2, 2:]
        assert np.all(np.abs(cross) < 4.0 / np.sqrt(n))

    def test_unknown_sequence(self):
        book = CodeBook.initialize(["a"], [0], beta_dim=2, alpha_dim=2)
        with pytest.raises(UnknownSequence):
            book.sequence_code("missing")

    def test_mixed_beta_dims_rejected(self):
        with pytest.raises(DimensionMismatch):
            CodeBook(
                sequence_codes={
                    "a": VariationalCode.initial(2),
                    "b": VariationalCode.initial(3),
                },
                action_codes={0: VariationalCode.initial(2)},
            )

    def test_add_mode_requires_equal_dims(self):
        with pytest.raises(DimensionMismatch):
            CodeBook.initialize(["a"], [0], beta_dim=2, alpha_dim=3, composition="add")
