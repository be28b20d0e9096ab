import numpy as np
import pytest

from iminr.decoder import (
    AdamState,
    MlpDecoder,
    TemporalEmbeddingConfig,
    adam_step,
    build_decoder,
    decoder_backward,
    decoder_forward,
    mlp_parameter_count,
    temporal_embedding,
)
from iminr.errors import DimensionMismatch, ShapeMismatch

from helpers import central_difference, max_relative_error


def reference_embedding(t, dim, base):
    """Independent straight-line evaluation of the sin/cos formula."""
    out = np.zeros(dim)
    for k in range(dim // 2):
        out[2 * k] = np.sin(t / base ** (2 * k / dim))
        out[2 * k + 1] = np.cos(t / base ** (2 * k / dim))
    return out


class TestTemporalEmbedding:
    def test_t_zero_alternates_zero_one(self):
        cfg = TemporalEmbeddingConfig(dim=8)
        np.testing.assert_allclose(
            temporal_embedding(0.0, cfg), [0, 1, 0, 1, 0, 1, 0, 1], atol=1e-15
        )

    def test_dim4_t1_matches_direct_formula(self):
        cfg = TemporalEmbeddingConfig(dim=4, base=10000.0)
        expected = [np.sin(1.0), np.cos(1.0), np.sin(1e-2), np.cos(1e-2)]
        np.testing.assert_allclose(temporal_embedding(1.0, cfg), expected, atol=1e-15)

    def test_fractional_time_against_reference(self):
        cfg = TemporalEmbeddingConfig(dim=32, base=10000.0)
        for t in (0.5, 1.5, 7.25):
            np.testing.assert_allclose(
                temporal_embedding(t, cfg),
                reference_embedding(t, 32, 10000.0),
                atol=1e-15,
            )

    def test_array_input_stacks_rows(self):
        cfg = TemporalEmbeddingConfig(dim=16)
        ts = np.array([0.0, 1.0, 2.0])
        batch = temporal_embedding(ts, cfg)
        assert batch.shape == (3, 16)
        for i, t in enumerate(ts):
            np.testing.assert_array_equal(batch[i], temporal_embedding(t, cfg))

    def test_odd_dim_rejected(self):
        with pytest.raises(DimensionMismatch):
            TemporalEmbeddingConfig(dim=5)


class TestBuildDecoder:
    def test_published_small_architecture_parameter_count(self):
        dec = build_decoder((1000, 500, 500, 200, 100), 512, 147, seed=0)
        assert dec.parameter_count == 1_399_147

    def test_published_large_architecture_parameter_count(self):
        dec = build_decoder((2000, 2000, 1000, 1000, 200, 100), 512, 147, seed=0)
        assert dec.parameter_count == 8_265_147

    def test_single_affine_map(self):
        dec = build_decoder((), 2, 3, seed=0)
        assert dec.parameter_count == 9

    def test_closed_form_matches_enumeration(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            depth = rng.integers(0, 4)
            hidden = tuple(int(x) for x in rng.integers(1, 40, size=depth))
            input_dim = int(rng.integers(1, 30))
            output_dim = int(rng.integers(1, 30))
            dec = build_decoder(hidden, input_dim, output_dim, seed=1)
            # brute force: count every scalar weight and bias
            brute = sum(w.size for w in dec.weights) + sum(b.size for b in dec.biases)
            assert brute == mlp_parameter_count(hidden, input_dim, output_dim)
            assert dec.parameter_count == brute

    def test_seed_reproducibility(self):
        a = build_decoder((8, 4), 5, 3, seed=42)
        b = build_decoder((8, 4), 5, 3, seed=42)
        for wa, wb in zip(a.weights, b.weights):
            np.testing.assert_array_equal(wa, wb)

    def test_init_bounds(self):
        dec = build_decoder((64,), 16, 8, seed=3)
        assert np.all(np.abs(dec.weights[0]) <= 1 / 4.0)
        assert np.all(dec.biases[0] == 0)


def straight_line_forward(dec, x):
    """Independent re-implementation: explicit affine + ELU chain."""
    h = x
    for i, (w, b) in enumerate(zip(dec.weights, dec.biases)):
        z = h @ w + b
        if i < len(dec.weights) - 1:
            h = np.where(z > 0, z, np.exp(np.minimum(z, 0)) - 1.0)
        else:
            h = z
    return h


class TestDecoderForward:
    def test_zero_decoder_outputs_zero(self):
        dec = build_decoder((4,), 6, 3, seed=0)
        for w in dec.weights:
            w[:] = 0
        out = decoder_forward(dec, np.ones(4), np.ones(2))
        np.testing.assert_array_equal(out, np.zeros(3))

    def test_deterministic_across_runs(self):
        x = np.linspace(-1, 1, 10)
        outs = []
        for _ in range(2):
            dec = build_decoder((7, 5), 10, 4, seed=9)
            outs.append(decoder_forward(dec, x[:6], x[6:]))
        np.testing.assert_array_equal(outs[0], outs[1])

    def test_matches_independent_reimplementation(self):
        rng = np.random.default_rng(12)
        dec = build_decoder((11, 7), 9, 5, seed=8)
        x = rng.normal(size=(20, 9))
        np.testing.assert_allclose(dec.forward(x), straight_line_forward(dec, x), atol=1e-12)

    def test_per_time_step_independence(self):
        cfg = TemporalEmbeddingConfig(dim=8)
        dec = build_decoder((6,), 12, 3, seed=4)
        code = np.random.default_rng(1).normal(size=4)
        times = np.arange(5, dtype=np.float64)
        taus = temporal_embedding(times, cfg)
        together = decoder_forward(dec, np.tile(code, (5, 1)), taus)
        shuffled = [decoder_forward(dec, code, taus[i]) for i in (3, 0, 4, 1, 2)]
        for row, i in zip(shuffled, (3, 0, 4, 1, 2)):
            # one-at-a-time and batched paths may differ by BLAS rounding only
            np.testing.assert_allclose(row, together[i], rtol=1e-12, atol=1e-14)

    def test_dimension_mismatch(self):
        dec = build_decoder((4,), 6, 3, seed=0)
        with pytest.raises(DimensionMismatch):
            decoder_forward(dec, np.ones(3), np.ones(2))


class TestDecoderBackward:
    def test_zero_output_gradient_gives_zero_gradients(self):
        dec = build_decoder((5, 4), 7, 3, seed=2)
        grads, code_grad = decoder_backward(dec, np.ones(4), np.ones(3), np.zeros(3))
        assert all(np.all(g == 0) for g in grads)
        assert np.all(code_grad == 0)

    def test_linear_case_input_gradient_is_w_transpose(self):
        dec = build_decoder((), 4, 3, seed=5)
        g = np.array([1.0, -2.0, 0.5])
        _, code_grad = decoder_backward(dec, np.ones(4), np.ones(0), g)
        np.testing.assert_allclose(code_grad, dec.weights[0] @ g, atol=1e-12)

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(100)
        for trial in range(20):
            hidden = tuple(int(x) for x in rng.integers(2, 6, size=2))
            dec = build_decoder(hidden, 5, 3, seed=trial)
            code = rng.normal(size=3)
            tau = rng.normal(size=2)
            probe = rng.normal(size=3)
            param_grads, code_grad = decoder_backward(dec, code, tau, probe)

            def loss_wrt_code(c):
                return float(probe @ decoder_forward(dec, c, tau))

            numeric_code = central_difference(loss_wrt_code, code)
            assert max_relative_error(code_grad, numeric_code) < 1e-4

            params = dec.parameters()
            for pi in rng.choice(len(params), size=2, replace=False):
                original = params[pi].copy()

                def loss_wrt_param(p, pi=pi):
                    params[pi][...] = p
                    val = float(probe @ decoder_forward(dec, code, tau))
                    return val

                numeric = central_difference(loss_wrt_param, original.copy())
                params[pi][...] = original
                assert max_relative_error(param_grads[pi], numeric) < 1e-4


class TestAdam:
    def test_zero_gradient_leaves_parameters_unchanged(self):
        p = [np.array([1.0, 2.0])]
        state = AdamState(p, lr=0.1)
        adam_step(state, p, [np.zeros(2)])
        np.testing.assert_array_equal(p[0], [1.0, 2.0])
        assert state.step_count == 1

    def test_first_step_on_quadratic_moves_by_lr(self):
        p = [np.array([1.0])]
        state = AdamState(p, lr=0.1)
        adam_step(state, p, [np.array([2.0])])  # grad of x^2 at 1
        np.testing.assert_allclose(p[0], [0.9], atol=1e-7)

    def test_descent_on_quadratic(self):
        p = [np.array([1.0])]
        state = AdamState(p, lr=0.1)
        for _ in range(100):
            adam_step(state, p, [2.0 * p[0]])
        assert abs(p[0][0]) < 0.05

    def test_shape_mismatch(self):
        p = [np.zeros(3)]
        state = AdamState(p)
        with pytest.raises(ShapeMismatch):
            adam_step(state, p, [np.zeros(4)])
