"""Reverse-mode differentiable kernels: temporal conv, pooling, graph conv, dense, dropout, BCE, Adam.

Every layer computes its forward pass with numpy and implements an exact
hand-derived backward pass. Double precision throughout; single-threaded
execution is bit-reproducible for a fixed seed.
"""

import math

import numpy as np

BCE_CLIP = 1e-7


class Tensor:
    """A parameter or activation: ndarray value plus an optional gradient slot."""

    __slots__ = ("data", "grad")

    def __init__(self, data):
        self.data = np.asarray(data, dtype=float)
        self.grad = None

    @property
    def shape(self):
        return self.data.shape

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def add_grad(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g


def glorot_uniform(rng: np.random.Generator, shape: tuple, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class TemporalConv:
    """Per-channel 1-D convolution with same zero padding, stride 1, plus ReLU.

    The same kernel is applied independently to every channel's time series
    (input N x T with one implicit feature, output N x T x F).
    """

    def __init__(self, kernel_size: int, filters: int, rng: np.random.Generator):
        if kernel_size % 2 != 1:
            raise ValueError(f"kernel size must be odd, got {kernel_size}")
        self.kernel_size = kernel_size
        self.filters = filters
        self.weight = Tensor(glorot_uniform(rng, (kernel_size, filters), kernel_size, filters))
        self.bias = Tensor(np.zeros(filters))
        self._cache = None

    def params(self):
        return [("conv.weight", self.weight), ("conv.bias", self.bias)]

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 2:
            raise ValueError(f"expected N x T input, got shape {x.shape}")
        n, t = x.shape
        if t < self.kernel_size:
            raise ValueError(f"T={t} shorter than kernel {self.kernel_size}")
        pad = self.kernel_size // 2
        xp = np.zeros((n, t + 2 * pad))
        xp[:, pad:pad + t] = x
        windows = np.lib.stride_tricks.sliding_window_view(xp, self.kernel_size, axis=1)
        pre = windows.reshape(n * t, self.kernel_size) @ self.weight.data
        pre = pre.reshape(n, t, self.filters) + self.bias.data
        out = relu(pre)
        self._cache = (xp, pre > 0, n, t, pad)
        return out

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        xp, active, n, t, pad = self._cache
        d_pre = grad_out * active
        windows = np.lib.stride_tricks.sliding_window_view(xp, self.kernel_size, axis=1)
        flat_win = windows.reshape(n * t, self.kernel_size)
        flat_d = d_pre.reshape(n * t, self.filters)
        self.weight.add_grad(flat_win.T @ flat_d)
        self.bias.add_grad(flat_d.sum(axis=0))
        dxp = np.zeros_like(xp)
        for k in range(self.kernel_size):
            dxp[:, k:k + t] += d_pre @ self.weight.data[k]
        return dxp[:, pad:pad + t]


class TimePool:
    """Global average over the time axis: N x T x F -> N x F."""

    def __init__(self):
        self._t = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._t = x.shape[1]
        return x.mean(axis=1)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        return np.repeat(grad_out[:, None, :], self._t, axis=1) / self._t


class NodePool:
    """Global average over the node axis: N x F -> F."""

    def __init__(self):
        self._n = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._n = x.shape[0]
        return x.mean(axis=0)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        return np.repeat(grad_out[None, :], self._n, axis=0) / self._n


class GraphConv:
    """One graph convolution: ReLU(A_hat @ Z @ W) with A_hat held constant."""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        self.weight = Tensor(
            glorot_uniform(rng, (in_features, out_features), in_features, out_features)
        )
        self._cache = None

    def params(self):
        return [("gcn.weight", self.weight)]

    def forward(self, z: np.ndarray, a_hat: np.ndarray) -> np.ndarray:
        propagated = a_hat @ z
        pre = propagated @ self.weight.data
        out = relu(pre)
        self._cache = (z, a_hat, propagated, pre > 0)
        return out

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        z, a_hat, propagated, active = self._cache
        d_pre = grad_out * active
        self.weight.add_grad(propagated.T @ d_pre)
        return a_hat.T @ (d_pre @ self.weight.data.T)


class Dense:
    """Fully connected layer with relu, sigmoid, or no activation."""

    def __init__(self, in_features: int, out_features: int, activation: str,
                 rng: np.random.Generator):
        if activation not in ("relu", "sigmoid", "none"):
            raise ValueError(f"unknown activation {activation!r}")
        self.activation = activation
        self.weight = Tensor(
            glorot_uniform(rng, (in_features, out_features), in_features, out_features)
        )
        self.bias = Tensor(np.zeros(out_features))
        self._cache = None

    def params(self):
        return [("weight", self.weight), ("bias", self.bias)]

    def forward(self, x: np.ndarray) -> np.ndarray:
        pre = x @ self.weight.data + self.bias.data
        if self.activation == "relu":
            out = relu(pre)
        elif self.activation == "sigmoid":
            out = sigmoid(pre)
        else:
            out = pre
        self._cache = (x, pre, out)
        return out

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        x, pre, out = self._cache
        if self.activation == "relu":
            d_pre = grad_out * (pre > 0)
        elif self.activation == "sigmoid":
            d_pre = grad_out * out * (1.0 - out)
        else:
            d_pre = grad_out
        if x.ndim == 1:
            self.weight.add_grad(np.outer(x, d_pre))
            self.bias.add_grad(d_pre)
            return d_pre @ self.weight.data.T
        self.weight.add_grad(x.T @ d_pre)
        self.bias.add_grad(d_pre.sum(axis=0))
        return d_pre @ self.weight.data.T


class Dropout:
    """Inverted dropout: zero with probability rate, scale survivors by 1/(1-rate)."""

    def __init__(self, rate: float, seed: int):
        if not (0.0 <= rate < 1.0):
            raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
        self.rate = rate
        self.rng = np.random.default_rng(seed)
        self._mask = None

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        if not training or self.rate == 0.0:
            self._mask = None
            return x
        keep = 1.0 - self.rate
        self._mask = (self.rng.random(x.shape) >= self.rate) / keep
        return x * self._mask

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._mask is None:
            return grad_out
        return grad_out * self._mask


def bce_loss(p: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy on clipped probabilities; returns (loss, dloss/dp).

    Probabilities are clipped to [BCE_CLIP, 1 - BCE_CLIP] before the logs; the
    gradient is exact for the clipped function (zero where the clip binds).
    """
    p = np.asarray(p, dtype=float)
    y = np.asarray(y, dtype=float)
    if p.shape != y.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {y.shape}")
    pc = np.clip(p, BCE_CLIP, 1.0 - BCE_CLIP)
    losses = -(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc))
    n = p.size
    inside = (p > BCE_CLIP) & (p < 1.0 - BCE_CLIP)
    dp = np.where(inside, (pc - y) / (pc * (1.0 - pc)) / n, 0.0)
    return float(losses.mean()), dp


class Adam:
    """Adam with bias correction over a fixed list of named tensors."""

    def __init__(self, params: list[tuple[str, Tensor]], learning_rate: float = 0.001,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(t.data) for _, t in params]
        self.v = [np.zeros_like(t.data) for _, t in params]

    def step(self):
        self.step_count += 1
        b1, b2 = self.beta1, self.beta2
        for i, (name, t) in enumerate(self.params):
            g = t.grad
            if g is None:
                continue
            if not np.all(np.isfinite(g)):
                raise FloatingPointError(f"non-finite gradient in {name}: training diverged")
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g
            m_hat = self.m[i] / (1.0 - b1 ** self.step_count)
            v_hat = self.v[i] / (1.0 - b2 ** self.step_count)
            t.data -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)

    def zero_grad(self):
        for _, t in self.params:
            t.zero_grad()


def gradcheck(loss_fn, blocks: list[tuple[str, Tensor]], h: float = 1e-5) -> dict[str, float]:
    """Central finite differences of loss_fn against the analytic grads in each block.

    loss_fn() must re-evaluate the scalar loss from the tensors' current values;
    each tensor's .grad must already hold the analytic gradient. Returns the
    relative error per block: ||analytic - fd||_inf / max(||analytic||_inf,
    ||fd||_inf, 1e-8).
    """
    report = {}
    for name, tensor in blocks:
        if tensor.grad is None:
            raise ValueError(f"block {name!r} has no analytic gradient")
        flat = tensor.data.reshape(-1)
        fd = np.zeros_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = loss_fn()
            flat[i] = orig - h
            down = loss_fn()
            flat[i] = orig
            fd[i] = (up - down) / (2.0 * h)
        analytic = tensor.grad.reshape(-1)
        scale = max(float(np.abs(analytic).max(initial=0.0)),
                    float(np.abs(fd).max(initial=0.0)), 1e-8)
        report[name] = float(np.abs(analytic - fd).max(initial=0.0)) / scale
    return report
