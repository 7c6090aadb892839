"""Dense ReLU networks with manual backpropagation and an Adam optimizer."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("sigmoid", "identity")


def sigmoid(z):
    # split by sign to avoid overflow in exp
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class Mlp:
    """Fully connected net, ReLU hidden layers, sigmoid or identity head.

    Weights are stored as (n_in, n_out) so a batch is propagated as x @ W + b.
    """

    def __init__(self, layer_sizes, output_activation="identity", rng=None,
                 final_scale: float = 1.0):
        if output_activation not in ACTIVATIONS:
            raise ValueError(f"output activation must be one of {ACTIVATIONS}")
        self.layer_sizes = [int(n) for n in layer_sizes]
        self.output_activation = output_activation
        rng = rng if rng is not None else np.random.default_rng(0)
        self.weights, self.biases = [], []
        for n_in, n_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            bound = 1.0 / np.sqrt(n_in)
            self.weights.append(rng.uniform(-bound, bound, size=(n_in, n_out)))
            self.biases.append(rng.uniform(-bound, bound, size=n_out))
        self.weights[-1] *= final_scale
        self.biases[-1] *= final_scale

    @property
    def params(self) -> list[np.ndarray]:
        return self.weights + self.biases

    def n_params(self) -> int:
        return sum(p.size for p in self.params)

    def copy(self) -> "Mlp":
        clone = Mlp.__new__(Mlp)
        clone.layer_sizes = list(self.layer_sizes)
        clone.output_activation = self.output_activation
        clone.weights = [w.copy() for w in self.weights]
        clone.biases = [b.copy() for b in self.biases]
        return clone

    def forward(self, x, return_cache=False):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.layer_sizes[0]:
            raise ValueError(f"input width {x.shape[-1]} != {self.layer_sizes[0]}")
        squeeze = x.ndim == 1
        h = np.atleast_2d(x)
        pre_acts, inputs = [], []
        n_layers = len(self.weights)
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            inputs.append(h)
            z = h @ W + b
            pre_acts.append(z)
            if i < n_layers - 1:
                h = np.maximum(z, 0.0)
            elif self.output_activation == "sigmoid":
                h = sigmoid(z)
            else:
                h = z
        if not np.all(np.isfinite(h)):
            raise FloatingPointError("non-finite network output")
        out = h[0] if squeeze else h
        if return_cache:
            return out, (inputs, pre_acts, h)
        return out

    def backward(self, cache, grad_out):
        """Gradients of a scalar loss given dLoss/dOutput.

        Returns (weight grads, bias grads, input grad). ReLU'(0) is taken as 0.
        """
        inputs, pre_acts, out = cache
        g = np.atleast_2d(np.asarray(grad_out, dtype=float))
        if self.output_activation == "sigmoid":
            g = g * out * (1.0 - out)
        n_layers = len(self.weights)
        gW, gb = [None] * n_layers, [None] * n_layers
        for i in range(n_layers - 1, -1, -1):
            if i < n_layers - 1:
                g = g * (pre_acts[i] > 0)
            gW[i] = inputs[i].T @ g
            gb[i] = g.sum(axis=0)
            g = g @ self.weights[i].T
        if not all(np.all(np.isfinite(a)) for a in gW):
            raise FloatingPointError("non-finite gradient")
        return gW, gb, g

    def to_dict(self) -> dict:
        return {
            "layer_sizes": self.layer_sizes,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "activations": ["relu"] * (len(self.weights) - 1) + [self.output_activation],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Mlp":
        net = cls.__new__(cls)
        net.layer_sizes = [int(n) for n in d["layer_sizes"]]
        net.output_activation = d["activations"][-1]
        net.weights = [np.asarray(w, dtype=float) for w in d["weights"]]
        net.biases = [np.asarray(b, dtype=float) for b in d["biases"]]
        return net


@dataclass
class AdamState:
    m: list
    v: list
    step: int = 0

    @classmethod
    def zeros_like(cls, params) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adam_step(params, grads, state: AdamState, lr: float, beta1=0.9, beta2=0.999,
              eps=1e-8) -> None:
    """Bias-corrected Adam descent step, updating params and state in place."""
    state.step += 1
    c1 = 1.0 - beta1 ** state.step
    c2 = 1.0 - beta2 ** state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
