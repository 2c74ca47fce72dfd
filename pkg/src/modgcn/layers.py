"""Dense math for graph-convolution and feed-forward layers.

Forward passes return a cache holding everything the hand-derived backward
pass needs. Layers apply sigma'(pre-activation) themselves; callers that fuse
softmax with cross-entropy feed the pre-activation gradient straight into
``backward_from_pre``.
"""

from dataclasses import dataclass

import numpy as np

from .sparse import CsrMatrix

ACTIVATIONS = ("identity", "relu", "softmax_rows")


def glorot_init(rows: int, cols: int, seed) -> np.ndarray:
    """Uniform Glorot sample in [-a, a] with a = sqrt(6 / (rows + cols))."""
    if rows < 1 or cols < 1:
        raise ValueError("matrix dimensions must be >= 1")
    a = np.sqrt(6.0 / (rows + cols))
    return np.random.default_rng(seed).uniform(-a, a, size=(rows, cols))


def softmax_rows(m: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction for overflow safety."""
    shifted = m - m.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_rows_backward(out: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    """Gradient through a row softmax given its output."""
    return out * (grad_out - np.sum(grad_out * out, axis=1, keepdims=True))


def apply_activation(name: str, pre: np.ndarray) -> np.ndarray:
    if name == "identity":
        return pre
    if name == "relu":
        return np.maximum(pre, 0.0)
    if name == "softmax_rows":
        return softmax_rows(pre)
    raise ValueError(f"unknown activation {name!r}")


def activation_backward(name: str, pre, out, grad_out) -> np.ndarray:
    """Gradient w.r.t. the pre-activation given the output gradient."""
    if name == "identity":
        return grad_out
    if name == "relu":
        return grad_out * (pre > 0.0)
    if name == "softmax_rows":
        return softmax_rows_backward(out, grad_out)
    raise ValueError(f"unknown activation {name!r}")


@dataclass
class LayerCache:
    h_in: object          # dense ndarray or CsrMatrix
    pre: np.ndarray
    out: np.ndarray


class GraphConvLayer:
    """Spectral graph convolution: sigma(sum_s S_s @ H @ W_s + b).

    One support/weight pair for the first-order GCN; K+1 pairs for a K-th
    order Chebyshev layer. All weight matrices share the shape (C, F).
    """

    def __init__(self, supports, weights, bias, activation):
        if len(supports) != len(weights):
            raise ValueError("need one weight matrix per support")
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        shapes = {w.shape for w in weights}
        if len(shapes) != 1:
            raise ValueError(f"weight matrices must share one shape, got {shapes}")
        self.supports = list(supports)
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.bias = np.asarray(bias, dtype=np.float64).reshape(1, -1)
        self.activation = activation

    @classmethod
    def create(cls, supports, in_dim, out_dim, activation, seed, layer_id):
        weights = [glorot_init(in_dim, out_dim, [seed, layer_id, s])
                   for s in range(len(supports))]
        return cls(supports, weights, np.zeros((1, out_dim)), activation)

    def forward(self, h_in):
        c = self.weights[0].shape[0]
        in_cols = h_in.n_cols if isinstance(h_in, CsrMatrix) else h_in.shape[1]
        if in_cols != c:
            raise ValueError(f"input has {in_cols} columns, weights expect {c}")
        n = self.supports[0].n_rows
        pre = np.broadcast_to(self.bias, (n, self.bias.shape[1])).copy()
        for support, w in zip(self.supports, self.weights):
            hw = h_in.dot(w) if isinstance(h_in, CsrMatrix) else h_in @ w
            pre += support.dot(hw)
        out = apply_activation(self.activation, pre)
        return out, LayerCache(h_in, pre, out)

    def backward_from_pre(self, cache: LayerCache, delta: np.ndarray):
        """Gradients given d(loss)/d(pre-activation).

        Returns (grad_in, grad_weights, grad_bias); grad_in is None when the
        layer input was a sparse feature matrix (no upstream layer).
        """
        h_in = cache.h_in
        sparse_in = isinstance(h_in, CsrMatrix)
        grad_weights = []
        grad_in = None if sparse_in else np.zeros_like(h_in)
        for support, w in zip(self.supports, self.weights):
            u = support.tdot(delta)
            grad_weights.append(h_in.tdot(u) if sparse_in else h_in.T @ u)
            if not sparse_in:
                grad_in += u @ w.T
        return grad_in, grad_weights, delta.sum(axis=0, keepdims=True)

    def backward(self, cache: LayerCache, grad_out: np.ndarray):
        delta = activation_backward(self.activation, cache.pre, cache.out, grad_out)
        return self.backward_from_pre(cache, delta)

    def param_items(self, prefix):
        for s, w in enumerate(self.weights):
            yield f"{prefix}.w{s}", w
        yield f"{prefix}.b", self.bias

    def grad_items(self, prefix, grad_weights, grad_bias):
        for s, gw in enumerate(grad_weights):
            yield f"{prefix}.w{s}", gw
        yield f"{prefix}.b", grad_bias


class DenseLayer:
    """Feed-forward layer sigma(H @ W + b); used by the auxiliary head."""

    def __init__(self, weight, bias, activation):
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.weight = np.asarray(weight, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64).reshape(1, -1)
        self.activation = activation

    @classmethod
    def create(cls, in_dim, out_dim, activation, seed, layer_id):
        return cls(glorot_init(in_dim, out_dim, [seed, layer_id, 0]),
                   np.zeros((1, out_dim)), activation)

    def forward(self, h_in):
        if h_in.shape[1] != self.weight.shape[0]:
            raise ValueError(f"input has {h_in.shape[1]} columns, "
                             f"weights expect {self.weight.shape[0]}")
        pre = h_in @ self.weight + self.bias
        out = apply_activation(self.activation, pre)
        return out, LayerCache(h_in, pre, out)

    def backward_from_pre(self, cache: LayerCache, delta: np.ndarray):
        grad_w = cache.h_in.T @ delta
        grad_in = delta @ self.weight.T
        return grad_in, grad_w, delta.sum(axis=0, keepdims=True)

    def backward(self, cache: LayerCache, grad_out: np.ndarray):
        delta = activation_backward(self.activation, cache.pre, cache.out, grad_out)
        return self.backward_from_pre(cache, delta)

    def param_items(self, prefix):
        yield f"{prefix}.w", self.weight
        yield f"{prefix}.b", self.bias
