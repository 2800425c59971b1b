"""Small fully connected ReLU network with hand-written reverse mode.

Besides the usual value/backward passes, the network exposes
input-tangent (JVP) passes and the parameter gradient of JVP outputs,
which is what derivative-supervised losses need: the derivative of the
prediction with respect to the query point is itself a function of the
parameters.  Activation patterns are treated as locally constant, which
is exact almost everywhere for ReLU.
"""

from __future__ import annotations

import numpy as np

from ..errors import DimMismatchError


class ReluMLP:
    """Dense layers with ReLU on all but the last.

    weights[i] has shape (fan_out, fan_in); layer_sizes includes input
    and output widths.  Parameters live in the weights/biases lists and
    flatten in layer order (weights then bias per layer).
    """

    def __init__(self, layer_sizes, rng=None):
        self.layer_sizes = tuple(int(s) for s in layer_sizes)
        if len(self.layer_sizes) < 2:
            raise DimMismatchError("need at least input and output sizes")
        if rng is None:
            rng = np.random.default_rng(0)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(self.layer_sizes, self.layer_sizes[1:]):
            self.weights.append(rng.standard_normal((fan_out, fan_in)) / np.sqrt(fan_in))
            self.biases.append(np.zeros(fan_out))

    @property
    def in_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def out_dim(self) -> int:
        return self.layer_sizes[-1]

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def get_params(self) -> np.ndarray:
        chunks = []
        for w, b in zip(self.weights, self.biases):
            chunks.append(w.ravel())
            chunks.append(b)
        return np.concatenate(chunks)

    def set_params(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (self.n_params,):
            raise DimMismatchError(f"expected {self.n_params} parameters, got {flat.shape}")
        pos = 0
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            self.weights[i] = flat[pos : pos + w.size].reshape(w.shape).copy()
            pos += w.size
            self.biases[i] = flat[pos : pos + b.size].copy()
            pos += b.size

    # -- forward / reverse ---------------------------------------------------

    def forward(self, x):
        """Batched forward pass: returns (output (B, out), cache)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.in_dim:
            raise DimMismatchError(f"input width {x.shape[1]} != {self.in_dim}")
        activations = [x]
        pre = []
        a = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w.T + b
            pre.append(z)
            a = z if i == last else np.maximum(z, 0.0)
            if i != last:
                activations.append(a)
        return a, (activations, pre)

    def backward(self, cache, out_cot):
        """Reverse pass: parameter gradients (flat) and input cotangent."""
        activations, pre = cache
        delta = np.asarray(out_cot, dtype=float)
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.biases)
        for i in range(len(self.weights) - 1, -1, -1):
            if i != len(self.weights) - 1:
                delta = delta * (pre[i] > 0)
            grads_w[i] = delta.T @ activations[i]
            grads_b[i] = delta.sum(axis=0)
            delta = delta @ self.weights[i]
        flat = np.concatenate([np.concatenate((w.ravel(), b)) for w, b in zip(grads_w, grads_b)])
        return flat, delta

    def input_gradient(self, cache, out_cot):
        """Input cotangent only (no parameter gradients)."""
        activations, pre = cache
        delta = np.asarray(out_cot, dtype=float)
        for i in range(len(self.weights) - 1, -1, -1):
            if i != len(self.weights) - 1:
                delta = delta * (pre[i] > 0)
            delta = delta @ self.weights[i]
        return delta

    # -- input tangents and their parameter gradients ------------------------

    def jvp(self, cache, tangent):
        """Directional derivative of the output along an input tangent.

        Returns (T (B, out), tangent cache) with the per-layer tangents
        needed by jvp_param_grads.
        """
        activations, pre = cache
        t = np.atleast_2d(np.asarray(tangent, dtype=float))
        tangents = [t]
        last = len(self.weights) - 1
        for i, w in enumerate(self.weights):
            t = t @ w.T
            if i != last:
                t = t * (pre[i] > 0)
                tangents.append(t)
        return t, tangents

    def jvp_param_grads(self, cache, tangent_cache, out_weights):
        """Flat parameter gradient of sum_b out_weights_b . JVP_b.

        Activation gates are held fixed, the almost-everywhere exact
        rule for ReLU; bias gradients on this path are identically zero.
        """
        activations, pre = cache
        tangents = tangent_cache
        r = np.asarray(out_weights, dtype=float)
        grads_w = [None] * len(self.weights)
        for i in range(len(self.weights) - 1, -1, -1):
            if i != len(self.weights) - 1:
                r = r * (pre[i] > 0)
            grads_w[i] = r.T @ tangents[i]
            r = r @ self.weights[i]
        flat = np.concatenate(
            [np.concatenate((gw.ravel(), np.zeros_like(b))) for gw, b in zip(grads_w, self.biases)]
        )
        return flat
