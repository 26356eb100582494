"""Minimal reverse-mode MLP machinery.

Linear layers with ReLU activations, explicit forward caches, hand-written
backward passes that accumulate into per-parameter gradient buffers, He /
Xavier / Gaussian initialisers, and Adam with optional decoupled weight
decay. Everything runs in float64 on NumPy arrays; batches are rows.
"""

import struct

import numpy as np

from .errors import DimensionError, FormatError, ParameterError, StateError

CHECKPOINT_MAGIC = b"KAE1"


class Parameter:
    """A trainable array plus its gradient accumulator."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, value, name=""):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.name = name

    def zero_grad(self):
        self.grad[...] = 0.0

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.value.shape})"


def init_weights(shape, scheme="he", rng=None, sigma=None):
    """Draw a weight matrix of ``shape`` (fan_out, fan_in).

    Schemes: ``he`` ~ N(0, 2/fan_in); ``xavier`` ~ U(+-sqrt(6/(fan_in+fan_out)));
    ``gaussian`` ~ N(0, sigma^2) with sigma required (sigma=0 gives zeros).
    """
    shape = tuple(int(s) for s in (shape if np.iterable(shape) else (shape,)))
    if len(shape) != 2 or min(shape) < 1:
        raise DimensionError(f"weight shape must be 2-D positive, got {shape}")
    if rng is None:
        rng = np.random.default_rng()
    fan_out, fan_in = shape
    if scheme == "he":
        return rng.normal(0.0, np.sqrt(2.0 / fan_in), shape)
    if scheme == "xavier":
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-bound, bound, shape)
    if scheme == "gaussian":
        if sigma is None:
            raise ParameterError("gaussian init requires sigma")
        if sigma < 0:
            raise ParameterError(f"sigma must be >= 0, got {sigma}")
        if sigma == 0:
            return np.zeros(shape)
        return rng.normal(0.0, sigma, shape)
    raise ParameterError(f"unknown init scheme {scheme!r}")


class Linear:
    """Affine layer ``y = x W^T + b`` for row-vector batches."""

    def __init__(self, in_dim, out_dim, rng, scheme="he", name="linear"):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = Parameter(init_weights((out_dim, in_dim), scheme, rng),
                                f"{name}.weight")
        self.bias = Parameter(np.zeros(out_dim), f"{name}.bias")

    def forward(self, x):
        return x @ self.weight.value.T + self.bias.value, x

    def backward(self, cache, grad_out):
        self.weight.grad += grad_out.T @ cache
        self.bias.grad += grad_out.sum(axis=0)
        return grad_out @ self.weight.value

    def parameters(self):
        return [self.weight, self.bias]


class ReLU:
    def forward(self, x):
        return np.maximum(x, 0.0), x > 0.0

    def backward(self, cache, grad_out):
        return grad_out * cache

    def parameters(self):
        return []


class _Cache:
    __slots__ = ("owner", "layers")

    def __init__(self, owner, layers):
        self.owner = owner
        self.layers = layers


class MLP:
    """Linear layers with ReLU in between; no activation on the output.

    ``widths`` chains input through hidden sizes to the output,
    e.g. ``(2, 64, 32, 8)``.
    """

    def __init__(self, widths, rng, scheme="he", name="mlp"):
        widths = [int(w) for w in widths]
        if len(widths) < 2 or min(widths) < 1:
            raise DimensionError(f"need at least two positive widths, got {widths}")
        self.widths = widths
        self.layers = []
        for i, (w_in, w_out) in enumerate(zip(widths[:-1], widths[1:])):
            self.layers.append(Linear(w_in, w_out, rng, scheme, f"{name}.{i}"))
            if i < len(widths) - 2:
                self.layers.append(ReLU())

    @property
    def in_dim(self):
        return self.widths[0]

    @property
    def out_dim(self):
        return self.widths[-1]

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise DimensionError(
                f"expected input of shape (batch, {self.in_dim}), got {x.shape}")
        caches = []
        for layer in self.layers:
            x, c = layer.forward(x)
            caches.append(c)
        return x, _Cache(self, caches)

    def backward(self, cache, grad_out):
        if cache is None or not isinstance(cache, _Cache) or cache.owner is not self:
            raise StateError("backward called with a cache from a different forward pass")
        g = np.asarray(grad_out, dtype=np.float64)
        for layer, c in zip(reversed(self.layers), reversed(cache.layers)):
            g = layer.backward(c, g)
        return g

    def parameters(self):
        return [p for layer in self.layers for p in layer.parameters()]


class IdentityMap:
    """Parameter-free identity; stands in for encoder/decoder in tests of a
    bare Koopman operator."""

    def __init__(self, dim):
        self.in_dim = dim
        self.out_dim = dim

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise DimensionError(
                f"expected input of shape (batch, {self.in_dim}), got {x.shape}")
        return x, _Cache(self, [])

    def backward(self, cache, grad_out):
        if cache is None or not isinstance(cache, _Cache) or cache.owner is not self:
            raise StateError("backward called with a cache from a different forward pass")
        return grad_out

    def parameters(self):
        return []


def mse(a, b):
    """Mean of squared element differences over all elements."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    d = a - b
    return float(np.mean(d * d))


def mse_with_grad(a, b):
    """MSE value and its gradient with respect to ``a``: 2(a-b)/N."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    d = a - b
    return float(np.mean(d * d)), (2.0 / d.size) * d


class Adam:
    """Adam with bias correction and optional decoupled weight decay.

    Decay (when ``weight_decay > 0``) multiplies values by ``1 - lr*wd``
    before the moment update, so it never enters the moment estimates.
    """

    def __init__(self, params, lr=1e-3, betas=(0.9, 0.999), eps=1e-8,
                 weight_decay=0.0):
        self.params = list(params)
        self.lr = float(lr)
        self.beta1, self.beta2 = float(betas[0]), float(betas[1])
        self.eps = float(eps)
        self.weight_decay = float(weight_decay)
        self.t = 0
        self._m = [np.zeros_like(p.value) for p in self.params]
        self._v = [np.zeros_like(p.value) for p in self.params]

    def step(self):
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for p, m, v in zip(self.params, self._m, self._v):
            if p.grad.shape != p.value.shape:
                raise DimensionError(f"gradient shape mismatch on {p.name}")
            if self.weight_decay > 0.0:
                p.value *= 1.0 - self.lr * self.weight_decay
            g = p.grad
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.value -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()


def save_params(path, params):
    """Write parameters to the ``KAE1`` checkpoint format.

    Layout: magic ``KAE1`` then, per parameter, little-endian u32 name
    length, UTF-8 name, u32 rows, u32 cols, and rows*cols float64 values in
    row-major order. 1-D parameters are stored as column vectors.
    """
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        for p in params:
            value = p.value if p.value.ndim == 2 else p.value.reshape(-1, 1)
            name = p.name.encode("utf-8")
            fh.write(struct.pack("<I", len(name)))
            fh.write(name)
            fh.write(struct.pack("<II", value.shape[0], value.shape[1]))
            fh.write(np.ascontiguousarray(value, dtype="<f8").tobytes())


def load_params(path):
    """Read a ``KAE1`` checkpoint into a dict of 2-D arrays."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != CHECKPOINT_MAGIC:
        raise FormatError(
            f"bad magic {blob[:4]!r}, expected {CHECKPOINT_MAGIC!r}", offset=0)
    out = {}
    pos = 4
    total = len(blob)

    def take(count, what):
        nonlocal pos
        if pos + count > total:
            raise FormatError(f"truncated checkpoint while reading {what}", offset=pos)
        chunk = blob[pos:pos + count]
        pos += count
        return chunk

    while pos < total:
        (name_len,) = struct.unpack("<I", take(4, "name length"))
        name = take(name_len, "name").decode("utf-8")
        rows, cols = struct.unpack("<II", take(8, "shape"))
        data = take(rows * cols * 8, f"values of {name!r}")
        out[name] = np.frombuffer(data, dtype="<f8").reshape(rows, cols).copy()
    return out


def assign_params(params, loaded):
    """Load checkpoint arrays into live parameters, matching by name."""
    for p in params:
        if p.name not in loaded:
            raise FormatError(f"checkpoint is missing parameter {p.name!r}")
        value = loaded[p.name]
        if p.value.ndim == 1:
            value = value.reshape(-1)
        if value.shape != p.value.shape:
            raise DimensionError(
                f"checkpoint shape {value.shape} does not match parameter "
                f"{p.name!r} of shape {p.value.shape}")
        p.value[...] = value
