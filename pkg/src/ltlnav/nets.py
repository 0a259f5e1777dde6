"""Small fully connected networks with hand-rolled backprop.

Hidden layers are rectified; actor outputs are tanh scaled to the action
bounds, critics are linear. Gradients are exact and checked against
central finite differences in the test suite.
"""

from __future__ import annotations

import numpy as np


class Mlp:
    def __init__(
        self,
        sizes: list[int],
        out_activation: str = "linear",
        out_scale: np.ndarray | float = 1.0,
        rng: np.random.Generator | None = None,
    ):
        if out_activation not in ("linear", "tanh"):
            raise ValueError(f"unknown output activation {out_activation!r}")
        rng = rng or np.random.default_rng(0)
        self.sizes = list(sizes)
        self.out_activation = out_activation
        self.out_scale = np.asarray(out_scale, dtype=float)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.biases.append(rng.uniform(-bound, bound, size=fan_out))

    def forward(self, x: np.ndarray) -> np.ndarray:
        y, _ = self.forward_cache(x)
        return y

    def forward_cache(self, x: np.ndarray) -> tuple[np.ndarray, list]:
        h = np.atleast_2d(np.asarray(x, dtype=float))
        cache = [h]
        n = len(self.weights)
        for k, (wt, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ wt + b
            if k < n - 1:
                h = np.maximum(z, 0.0)
            elif self.out_activation == "tanh":
                h = np.tanh(z) * self.out_scale
            else:
                h = z
            cache.append(h)
        return h, cache

    def backward(
        self, cache: list, grad_out: np.ndarray
    ) -> tuple[list[np.ndarray], list[np.ndarray], np.ndarray]:
        """Gradients of sum(grad_out * output) w.r.t. weights, biases, input."""
        n = len(self.weights)
        grad = np.atleast_2d(np.asarray(grad_out, dtype=float))
        gw: list[np.ndarray] = [None] * n
        gb: list[np.ndarray] = [None] * n
        for k in range(n - 1, -1, -1):
            h_out = cache[k + 1]
            if k == n - 1:
                if self.out_activation == "tanh":
                    t = h_out / self.out_scale
                    grad = grad * self.out_scale * (1.0 - t * t)
            else:
                grad = grad * (h_out > 0.0)
            h_in = cache[k]
            gw[k] = h_in.T @ grad
            gb[k] = grad.sum(axis=0)
            grad = grad @ self.weights[k].T
        return gw, gb, grad

    # --- parameter plumbing ---------------------------------------------------

    def params(self) -> list[np.ndarray]:
        return self.weights + self.biases

    def copy(self) -> "Mlp":
        other = Mlp.__new__(Mlp)
        other.sizes = list(self.sizes)
        other.out_activation = self.out_activation
        other.out_scale = self.out_scale.copy()
        other.weights = [w.copy() for w in self.weights]
        other.biases = [b.copy() for b in self.biases]
        return other

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params()])

    def set_flat(self, flat: np.ndarray) -> None:
        i = 0
        for p in self.params():
            p[...] = flat[i : i + p.size].reshape(p.shape)
            i += p.size

    def soft_update_from(self, live: "Mlp", tau: float) -> None:
        for tgt, src in zip(self.params(), live.params()):
            tgt *= 1.0 - tau
            tgt += tau * src

    def to_arrays(self) -> dict[str, np.ndarray]:
        out = {"sizes": np.array(self.sizes), "out_scale": self.out_scale,
               "out_activation": np.array(self.out_activation)}
        for i, (wt, b) in enumerate(zip(self.weights, self.biases)):
            out[f"w{i}"] = wt
            out[f"b{i}"] = b
        return out

    @staticmethod
    def from_arrays(d: dict) -> "Mlp":
        sizes = [int(v) for v in d["sizes"]]
        net = Mlp(sizes, out_activation=str(d["out_activation"]),
                  out_scale=np.asarray(d["out_scale"], dtype=float))
        for i in range(len(sizes) - 1):
            net.weights[i] = np.asarray(d[f"w{i}"], dtype=float)
            net.biases[i] = np.asarray(d[f"b{i}"], dtype=float)
        return net


class Sgd:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        for p, g in zip(params, grads):
            p -= self.lr * g


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: list[np.ndarray] | None = None
        self.v: list[np.ndarray] | None = None

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            mh = m / (1 - b1 ** self.t)
            vh = v / (1 - b2 ** self.t)
            p -= self.lr * mh / (np.sqrt(vh) + self.eps)
