"""Shallow classifiers topped by either an M6 unit or a 3x3x6 convolution.

Both share the head ``flatten -> dense(hidden, ReLU) -> dense(K, softmax)``.
Parameters live in a plain dict of float64 arrays so the optimizer and the
checkpoint writer can treat them uniformly.
"""
from dataclasses import dataclass, field

import numpy as np

from ..kernels import conv3x3, conv3x3_weight_grad
from ..m6 import ENCODINGS, M6Params, m6_features, m6_init, m6_param_grads

TOPS = ("m6", "conv")
CONV_FILTERS = 6


@dataclass(frozen=True)
class ModelSpec:
    top: str = "m6"
    hidden: int = 64
    classes: int = 10
    input_shape: tuple = (28, 28, 1)
    encoding: str = "rgb"

    def __post_init__(self):
        if self.top not in TOPS:
            raise ValueError(f"top must be one of {TOPS}, got {self.top!r}")
        if self.classes < 2:
            raise ValueError("need at least two classes")
        if self.encoding not in ENCODINGS:
            raise ValueError(f"unknown M6 encoding {self.encoding!r}")
        object.__setattr__(self, "input_shape", tuple(int(v) for v in self.input_shape))

    @property
    def top_channels(self):
        return ENCODINGS[self.encoding] if self.top == "m6" else CONV_FILTERS

    @property
    def flat_size(self):
        h, w, _ = self.input_shape
        return h * w * self.top_channels


@dataclass
class ModelState:
    params: dict
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    step: int = 0

    def copy(self):
        return ModelState({k: a.copy() for k, a in self.params.items()},
                          {k: a.copy() for k, a in self.m.items()},
                          {k: a.copy() for k, a in self.v.items()},
                          self.step)

    def m6_params(self):
        return M6Params.from_array(self.params["m6"])


def _glorot(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_model(spec, seed=0):
    rng = np.random.default_rng(seed)
    params = {}
    if spec.top == "m6":
        params["m6"] = m6_init().as_array()
    else:
        c = spec.input_shape[2]
        params["conv_w"] = _glorot(rng, (3, 3, c, CONV_FILTERS), 9 * c, 9 * CONV_FILTERS)
        params["conv_b"] = np.zeros(CONV_FILTERS)
    params["w1"] = _glorot(rng, (spec.flat_size, spec.hidden), spec.flat_size, spec.hidden)
    params["b1"] = np.zeros(spec.hidden)
    params["w2"] = _glorot(rng, (spec.hidden, spec.classes), spec.hidden, spec.classes)
    params["b2"] = np.zeros(spec.classes)
    zeros = {k: np.zeros_like(a) for k, a in params.items()}
    return ModelState(params, zeros, {k: a.copy() for k, a in zeros.items()}, 0)


def _check_input(spec, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 3:
        x = x[None]
    if x.shape[1:] != spec.input_shape:
        raise ValueError(f"input shape {x.shape[1:]} does not match model {spec.input_shape}")
    return x


def softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _head(params, flat):
    h = flat @ params["w1"] + params["b1"]
    r = np.maximum(h, 0.0)
    return h, r, r @ params["w2"] + params["b2"]


def cross_entropy(logits, labels, reduction="mean"):
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    per = -logp[np.arange(len(labels)), labels]
    return per.mean() if reduction == "mean" else per.sum()


def _m6_head_input(feats):
    # M6 maps are mostly 1 (white background); the head reads their
    # complement so its inputs are sparse like raw digits. Without this the
    # first Adam steps push every hidden unit into the dead ReLU regime.
    return 1.0 - feats


def top_features(spec, params, x):
    """Activations of the top layer as fed to the head, (N, H, W, channels)."""
    if spec.top == "m6":
        return _m6_head_input(m6_features(x, M6Params.from_array(params["m6"]), spec.encoding))
    return np.maximum(conv3x3(x, params["conv_w"], params["conv_b"]), 0.0)


def logits(spec, state, x):
    x = _check_input(spec, x)
    feats = top_features(spec, state.params, x)
    return _head(state.params, feats.reshape(len(x), -1))[2]


def forward(spec, state, x):
    """Class probabilities, shape (N, K)."""
    return softmax(logits(spec, state, x))


def backward(spec, params, x, labels, reduction="mean"):
    """Cross-entropy loss and its gradient for every parameter array.

    Conv and dense layers use exact backprop; the four M6 parameters use
    central differences through the whole layer.
    """
    loss, grads, _ = loss_grads_logits(spec, params, x, labels, reduction)
    return loss, grads


def loss_grads_logits(spec, params, x, labels, reduction="mean"):
    """:func:`backward` that also hands back the logits of the batch."""
    x = _check_input(spec, x)
    labels = np.asarray(labels, dtype=np.int64)
    if len(x) == 0:
        raise ValueError("empty batch")
    n = len(x)
    if spec.top == "m6":
        feats = top_features(spec, params, x)
    else:
        pre = conv3x3(x, params["conv_w"], params["conv_b"])
        feats = np.maximum(pre, 0.0)
    flat = feats.reshape(n, -1)
    h, r, out = _head(params, flat)
    loss = cross_entropy(out, labels, reduction)
    if not np.isfinite(loss):
        raise FloatingPointError(f"non-finite loss {loss}")

    dlogits = softmax(out)
    dlogits[np.arange(n), labels] -= 1.0
    if reduction == "mean":
        dlogits /= n
    grads = {"w2": r.T @ dlogits, "b2": dlogits.sum(axis=0)}
    dh = (dlogits @ params["w2"].T) * (h > 0)
    grads["w1"] = flat.T @ dh
    grads["b1"] = dh.sum(axis=0)

    if spec.top == "m6":
        def head_loss(f):
            return cross_entropy(_head(params, _m6_head_input(f).reshape(n, -1))[2], labels, reduction)

        grads["m6"] = m6_param_grads(x, M6Params.from_array(params["m6"]), head_loss, spec.encoding)
    else:
        dpre = (dh @ params["w1"].T).reshape(pre.shape) * (pre > 0)
        grads["conv_w"], grads["conv_b"] = conv3x3_weight_grad(x, dpre)
    return loss, grads, out
