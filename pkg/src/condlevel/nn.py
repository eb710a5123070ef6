"""Minimal dense neural-network kernel: layers, backprop, Adam, LR schedule.

Everything is float64 and batch-major: inputs are (batch, features) arrays.
The kernel is intentionally small (dense layers with relu/identity only) and
its gradients are verified against central finite differences in the test
suite; that check is the module's core correctness property.

Training is deterministic: given the same seed, data, and schedule, the
parameters after N steps are bitwise identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteGradientError, ShapeMismatchError

ACTIVATIONS = ("relu", "identity")


@dataclass
class DenseLayer:
    """Fully-connected layer: activation(x @ W.T + b)."""

    weights: np.ndarray  # (out, in)
    biases: np.ndarray   # (out,)
    activation: str = "relu"

    def __post_init__(self):
        if self.weights.ndim != 2 or self.biases.shape != (self.weights.shape[0],):
            raise ShapeMismatchError(
                f"weights {self.weights.shape} / biases {self.biases.shape} inconsistent"
            )
        if self.activation not in ACTIVATIONS:
            raise ShapeMismatchError(f"unknown activation {self.activation!r}")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.in_dim:
            raise ShapeMismatchError(f"input dim {x.shape[1]} != layer in dim {self.in_dim}")
        pre = x @ self.weights.T + self.biases
        if self.activation == "relu":
            return np.maximum(pre, 0.0)
        return pre


def init_layer(in_dim: int, out_dim: int, activation: str,
               rng: np.random.Generator) -> DenseLayer:
    """Uniform(-1/sqrt(in), 1/sqrt(in)) weights, zero biases."""
    bound = 1.0 / np.sqrt(in_dim)
    w = rng.uniform(-bound, bound, size=(out_dim, in_dim))
    return DenseLayer(weights=w, biases=np.zeros(out_dim), activation=activation)


class Mlp:
    """A stack of dense layers with cached forward passes for backprop."""

    def __init__(self, layers: list[DenseLayer]):
        for a, b in zip(layers, layers[1:]):
            if a.out_dim != b.in_dim:
                raise ShapeMismatchError(
                    f"layer dims do not chain: {a.out_dim} -> {b.in_dim}"
                )
        self.layers = layers

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def forward(self, x: np.ndarray, cache: list | None = None) -> np.ndarray:
        """Forward pass; pass a list as `cache` to record per-layer inputs/pre-activations."""
        h = np.atleast_2d(np.asarray(x, dtype=np.float64))
        for layer in self.layers:
            pre = h @ layer.weights.T + layer.biases
            if cache is not None:
                cache.append((h, pre))
            h = np.maximum(pre, 0.0) if layer.activation == "relu" else pre
        return h

    def backward(self, cache: list, grad_out: np.ndarray, need_input_grad: bool = True):
        """Backprop `grad_out` (d loss / d output) through the cached pass.

        Returns (grads, grad_in) where grads is a list of (dW, db) matching
        self.layers and grad_in is d loss / d input (None when
        need_input_grad is False, which skips one matmul).
        """
        if len(cache) != len(self.layers):
            raise ShapeMismatchError("cache does not match layer count; rerun forward")
        grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(self.layers)
        delta = np.asarray(grad_out, dtype=np.float64)
        for i in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[i]
            x, pre = cache[i]
            if layer.activation == "relu":
                delta = delta * (pre > 0.0)
            grads[i] = (delta.T @ x, delta.sum(axis=0))
            if i > 0 or need_input_grad:
                delta = delta @ layer.weights
            else:
                delta = None
        return grads, delta

    def parameters(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.append(layer.weights)
            out.append(layer.biases)
        return out


def mlp_from_dims(dims: list[int], final_activation: str,
                  rng: np.random.Generator) -> Mlp:
    """Build an MLP with relu hidden layers and the given final activation."""
    layers = []
    for i in range(len(dims) - 1):
        act = final_activation if i == len(dims) - 2 else "relu"
        layers.append(init_layer(dims[i], dims[i + 1], act, rng))
    return Mlp(layers)


@dataclass
class LrSchedule:
    """Step decay: lr(epoch) = base * factor^floor(epoch / every)."""

    base_lr: float = 1e-3
    decay_factor: float = 0.1
    decay_every: int = 2500

    def lr_at(self, epoch: int) -> float:
        return self.base_lr * self.decay_factor ** (epoch // self.decay_every)


@dataclass
class AdamState:
    """First/second moment accumulators mirroring a parameter list."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    _scratch: list[np.ndarray] = field(default_factory=list, repr=False)

    @classmethod
    def for_params(cls, params: list[np.ndarray], beta1: float = 0.9,
                   beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            beta1=beta1, beta2=beta2, eps=eps,
            _scratch=[np.empty_like(p) for p in params],
        )


def adam_step(params: list[np.ndarray], grads: list[np.ndarray],
              state: AdamState, lr: float) -> None:
    """One bias-corrected Adam update, in place.

    Updates run through preallocated scratch buffers; the optimizer is
    memory-bound at the model sizes used here and this avoids one temporary
    allocation per operation.
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeMismatchError("params / grads / state lengths differ")
    if not state._scratch:
        state._scratch = [np.empty_like(p) for p in params]
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for p, g, m, v, s in zip(params, grads, state.m, state.v, state._scratch):
        if p.shape != g.shape:
            raise ShapeMismatchError(f"param {p.shape} vs grad {g.shape}")
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError("non-finite gradient encountered")
        # m = beta1*m + (1-beta1)*g ; v = beta2*v + (1-beta2)*g^2
        m *= state.beta1
        np.multiply(g, 1.0 - state.beta1, out=s)
        m += s
        v *= state.beta2
        np.multiply(g, g, out=s)
        s *= 1.0 - state.beta2
        v += s
        # p -= lr * (m/bc1) / (sqrt(v/bc2) + eps)
        np.divide(v, bc2, out=s)
        np.sqrt(s, out=s)
        s += state.eps
        np.divide(m, s, out=s)
        s *= lr / bc1
        p -= s
