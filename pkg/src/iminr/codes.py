"""Variational codebooks: per-sequence and per-action latent distributions.

Each code is an independent diagonal Gaussian whose mean and log-variance are
optimized directly (there is no encoder). Sampling uses the standard
reparameterization ``mean + exp(logvar/2) * noise`` so gradients reach both
parameters; the action part and sequence part are drawn independently, which
realizes the block-diagonal covariance of the composed code by construction.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, UnknownSequence


@dataclass
class VariationalCode:
    """Mean and log-variance of one diagonal Gaussian code."""

    mean: np.ndarray
    log_variance: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.log_variance = np.asarray(self.log_variance, dtype=np.float64)
        if self.mean.ndim != 1 or self.mean.shape != self.log_variance.shape:
            raise DimensionMismatch("mean and log_variance must be equal-length vectors")
        if not (np.all(np.isfinite(self.mean)) and np.all(np.isfinite(self.log_variance))):
            raise DimensionMismatch("code parameters must be finite")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @classmethod
    def initial(cls, dim: int, init_logvar: float = 1.0) -> "VariationalCode":
        return cls(np.zeros(dim), np.full(dim, float(init_logvar)))


def sample_code(vc: VariationalCode, noise) -> np.ndarray:
    """Reparameterized sample: mean + exp(logvar/2) * noise."""
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape != vc.mean.shape:
        raise DimensionMismatch(f"noise shape {noise.shape} != code dim ({vc.dim},)")
    return vc.mean + np.exp(0.5 * vc.log_variance) * noise


def sample_code_backward(vc: VariationalCode, noise, grad_sample):
    """Chain a gradient w.r.t. the sample back to (mean, log_variance)."""
    noise = np.asarray(noise, dtype=np.float64)
    g = np.asarray(grad_sample, dtype=np.float64)
    d_mean = g.copy()
    d_logvar = 0.5 * np.exp(0.5 * vc.log_variance) * noise * g
    return d_mean, d_logvar


def kl_divergence(vc: VariationalCode) -> float:
    """KL(N(mean, diag exp(logvar)) || N(0, I)), in closed form."""
    lv = vc.log_variance
    return float(0.5 * np.sum(np.exp(lv) + vc.mean**2 - 1.0 - lv))


def kl_divergence_gradients(vc: VariationalCode):
    """Analytic (d/d mean, d/d logvar) of the closed-form KL."""
    return vc.mean.copy(), 0.5 * (np.exp(vc.log_variance) - 1.0)


def compose_code(alpha_sample, beta_sample, mode: str) -> np.ndarray:
    """Combine action and sequence samples: 'concat' ([alpha; beta]) or 'add'."""
    a = np.asarray(alpha_sample, dtype=np.float64)
    b = np.asarray(beta_sample, dtype=np.float64)
    if mode == "concat":
        return np.concatenate([a, b])
    if mode == "add":
        if a.shape != b.shape:
            raise DimensionMismatch(
                f"additive composition needs equal dims, got {a.shape} and {b.shape}"
            )
        return a + b
    raise ValueError(f"unknown composition mode {mode!r}")


def compose_code_backward(grad_code, mode: str, alpha_dim: int):
    """Split a composed-code gradient into (alpha, beta) gradients."""
    g = np.asarray(grad_code, dtype=np.float64)
    if mode == "concat":
        return g[..., :alpha_dim], g[..., alpha_dim:]
    if mode == "add":
        return g, g
    raise ValueError(f"unknown composition mode {mode!r}")


@dataclass
class CodeBook:
    """All sequence codes (beta) and action codes (alpha) of one model."""

    sequence_codes: dict
    action_codes: dict
    composition: str = "concat"

    def __post_init__(self):
        if self.composition not in ("concat", "add"):
            raise ValueError(f"unknown composition mode {self.composition!r}")
        self.validate()

    def validate(self):
        beta_dims = {c.dim for c in self.sequence_codes.values()}
        alpha_dims = {c.dim for c in self.action_codes.values()}
        if len(beta_dims) > 1:
            raise DimensionMismatch("sequence codes have mixed dimensions")
        if len(alpha_dims) > 1:
            raise DimensionMismatch("action codes have mixed dimensions")
        if self.composition == "add" and beta_dims and alpha_dims:
            if beta_dims != alpha_dims:
                raise DimensionMismatch("additive composition needs equal alpha/beta dims")

    @property
    def beta_dim(self) -> int:
        return next(iter(self.sequence_codes.values())).dim

    @property
    def alpha_dim(self) -> int:
        return next(iter(self.action_codes.values())).dim

    @property
    def code_dim(self) -> int:
        """Dimension of the composed code the decoder consumes."""
        if self.composition == "concat":
            return self.alpha_dim + self.beta_dim
        return self.beta_dim

    def sequence_code(self, sequence_id: str) -> VariationalCode:
        try:
            return self.sequence_codes[sequence_id]
        except KeyError:
            raise UnknownSequence(f"no code for sequence {sequence_id!r}") from None

    @classmethod
    def initialize(
        cls,
        sequence_ids,
        actions,
        beta_dim: int,
        alpha_dim: int,
        composition: str = "concat",
        init_logvar: float = 1.0,
    ) -> "CodeBook":
        """Zero means, constant log-variance, one beta per id and alpha per action."""
        return cls(
            sequence_codes={
                sid: VariationalCode.initial(beta_dim, init_logvar) for sid in sequence_ids
            },
            action_codes={
                int(z): VariationalCode.initial(alpha_dim, init_logvar) for z in actions
            },
            composition=composition,
        )
