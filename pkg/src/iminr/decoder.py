"""Temporal embedding, the shared MLP decoder, and the Adam optimizer.

The decoder maps ``concat(code, temporal_embedding(t))`` to a flattened pose
and is shared by all sequences; every time step is decoded independently, so
a sequence of any length is just a batch of rows. Forward and backward passes
are written out explicitly (plain numpy) so gradients are exact and the whole
pipeline stays deterministic; the test suite checks every gradient against
central finite differences.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ShapeMismatch


@dataclass(frozen=True)
class TemporalEmbeddingConfig:
    """Sinusoidal embedding of an absolute (real-valued) time index."""

    dim: int = 256
    base: float = 10000.0

    def __post_init__(self):
        if self.dim <= 0 or self.dim % 2 != 0:
            raise DimensionMismatch(f"embedding dim must be even and positive, got {self.dim}")
        if self.base <= 0:
            raise DimensionMismatch("embedding base must be positive")


def temporal_embedding(t, cfg: TemporalEmbeddingConfig) -> np.ndarray:
    """Embed time indices ``t`` (scalar or array) as interleaved sin/cos pairs.

    Component 2k is sin(t / base^(2k/dim)) and component 2k+1 the matching
    cosine. Time is absolute: t=0 is the beginning of an action, and real t
    (e.g. 0.5) interpolates between frames.
    """
    t = np.asarray(t, dtype=np.float64)
    k = np.arange(cfg.dim // 2, dtype=np.float64)
    scale = cfg.base ** (2.0 * k / cfg.dim)
    angles = t[..., None] / scale
    out = np.empty(t.shape + (cfg.dim,))
    out[..., 0::2] = np.sin(angles)
    out[..., 1::2] = np.cos(angles)
    return out


class MlpDecoder:
    """Fully connected decoder: ELU on hidden layers, identity output."""

    def __init__(self, weights, biases, input_dim, output_dim):
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        self.input_dim = input_dim
        self.output_dim = output_dim
        sizes = [input_dim] + [w.shape[1] for w in self.weights]
        for i, w in enumerate(self.weights):
            if w.shape != (sizes[i], sizes[i + 1]) or self.biases[i].shape != (sizes[i + 1],):
                raise ShapeMismatch(f"layer {i}: inconsistent weight/bias shapes")
        if sizes[-1] != output_dim:
            raise ShapeMismatch("last layer does not produce output_dim")

    @property
    def layer_sizes(self):
        return tuple(w.shape[1] for w in self.weights[:-1])

    @property
    def parameter_count(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def parameters(self):
        """Flat list: all weights then all biases (fixed order for Adam)."""
        return self.weights + self.biases

    def forward(self, x, want_cache=False):
        """Batched forward pass for rows ``x (N, input_dim)``."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.input_dim:
            raise DimensionMismatch(
                f"input dim {x.shape[-1]} != decoder input_dim {self.input_dim}"
            )
        h = x
        activations = [x]
        pre = []
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            pre.append(z)
            h = z if i == last else _elu(z)
            activations.append(h)
        if want_cache:
            return h, (activations, pre)
        return h

    def backward(self, cache, grad_output):
        """Exact gradients of ``forward`` from a cached pass.

        Returns ``(param_grads, grad_input)`` where param_grads matches the
        layout of :meth:`parameters`.
        """
        activations, pre = cache
        g = np.asarray(grad_output, dtype=np.float64)
        if g.shape != pre[-1].shape:
            raise DimensionMismatch("grad_output shape disagrees with forward output")
        w_grads = [None] * len(self.weights)
        b_grads = [None] * len(self.biases)
        last = len(self.weights) - 1
        for i in range(last, -1, -1):
            if i != last:
                g = g * _elu_grad(pre[i])
            w_grads[i] = activations[i].T @ g
            b_grads[i] = g.sum(axis=0)
            g = g @ self.weights[i].T
        return w_grads + b_grads, g


def _elu(z):
    return np.where(z > 0, z, np.expm1(np.minimum(z, 0.0)))


def _elu_grad(z):
    return np.where(z > 0, 1.0, np.exp(np.minimum(z, 0.0)))


def mlp_parameter_count(layer_sizes, input_dim, output_dim) -> int:
    """Closed form: sum over layers of fan_in * fan_out + fan_out."""
    sizes = [input_dim] + list(layer_sizes) + [output_dim]
    return sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:]))


def build_decoder(layer_sizes, input_dim, output_dim, seed) -> MlpDecoder:
    """Create a decoder with uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights.

    Biases start at zero. The given seed fully determines the weights.
    """
    sizes = [int(input_dim)] + [int(s) for s in layer_sizes] + [int(output_dim)]
    if any(s <= 0 for s in sizes):
        raise DimensionMismatch("all layer sizes must be positive")
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpDecoder(weights, biases, input_dim, output_dim)


def decoder_forward(dec: MlpDecoder, code, tau) -> np.ndarray:
    """Decode one pose vector from a code and a temporal embedding."""
    code = np.asarray(code, dtype=np.float64)
    tau = np.asarray(tau, dtype=np.float64)
    if code.shape[-1] + tau.shape[-1] != dec.input_dim:
        raise DimensionMismatch(
            f"dim(code) + dim(tau) = {code.shape[-1] + tau.shape[-1]}"
            f" != input_dim {dec.input_dim}"
        )
    x = np.concatenate([code, tau], axis=-1)
    single = x.ndim == 1
    out = dec.forward(x[None, :] if single else x)
    return out[0] if single else out


def decoder_backward(dec: MlpDecoder, code, tau, output_gradient):
    """Exact gradients of ``decoder_forward`` for one (code, tau) pair.

    Returns ``(param_grads, code_grad)``; the code gradient is w.r.t. the
    composed code input, so callers chain it through composition and the
    reparameterization themselves.
    """
    code = np.asarray(code, dtype=np.float64)
    tau = np.asarray(tau, dtype=np.float64)
    g = np.asarray(output_gradient, dtype=np.float64)
    if g.shape[-1] != dec.output_dim:
        raise DimensionMismatch("output_gradient dim != decoder output_dim")
    x = np.concatenate([code, tau], axis=-1)
    if x.shape[-1] != dec.input_dim:
        raise DimensionMismatch("dim(code) + dim(tau) != input_dim")
    single = x.ndim == 1
    if single:
        x = x[None, :]
        g = g[None, :]
    _, cache = dec.forward(x, want_cache=True)
    param_grads, grad_input = dec.backward(cache, g)
    code_grad = grad_input[..., : code.shape[-1]]
    return param_grads, code_grad[0] if single else code_grad


class AdamState:
    """Adam with bias correction; one moment pair per parameter array."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(np.asarray(p, dtype=np.float64)) for p in params]
        self.v = [np.zeros_like(np.asarray(p, dtype=np.float64)) for p in params]


def adam_step(state: AdamState, params, grads):
    """One in-place Adam update; returns the updated parameter list."""
    if len(params) != len(state.m) or len(grads) != len(state.m):
        raise ShapeMismatch("parameter/gradient count disagrees with optimizer state")
    state.step_count += 1
    t = state.step_count
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    for i, (p, g) in enumerate(zip(params, grads)):
        g = np.asarray(g, dtype=np.float64)
        if p.shape != state.m[i].shape or g.shape != state.m[i].shape:
            raise ShapeMismatch(f"parameter {i}: shape disagrees with optimizer state")
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g
        m_hat = state.m[i] / bc1
        v_hat = state.v[i] / bc2
        p -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params
