"""Deterministic MLP core: forward pass, reverse-mode gradients, Adam.

Parameters live in a single flat float64 vector; the layout is derived from
the layer widths (weights row-major, then biases, layer by layer).  Hidden
activations are tanh, the output head is linear.  All functions are pure and
operate on plain numpy arrays, so callers can run independent models in
parallel.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths [input, hidden..., output]."""

    widths: tuple

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if len(self.widths) < 2:
            raise ValueError("need at least an input and an output width")
        if any(w < 1 for w in self.widths):
            raise ValueError("layer widths must be >= 1")

    @property
    def n_layers(self):
        return len(self.widths) - 1

    def n_params(self):
        return sum(
            (w_in + 1) * w_out for w_in, w_out in zip(self.widths[:-1], self.widths[1:])
        )

    def index_map(self):
        """Per-layer (weight, bias) slices into the flat parameter vector."""
        out = []
        ofs = 0
        for w_in, w_out in zip(self.widths[:-1], self.widths[1:]):
            w_sl = slice(ofs, ofs + w_in * w_out)
            ofs += w_in * w_out
            b_sl = slice(ofs, ofs + w_out)
            ofs += w_out
            out.append((w_sl, b_sl))
        return out


def unflatten(spec, params):
    params = np.asarray(params, dtype=float)
    if params.shape != (spec.n_params(),):
        raise DimensionMismatch(
            f"expected {spec.n_params()} parameters, got {params.shape}"
        )
    layers = []
    for (w_sl, b_sl), w_in, w_out in zip(
        spec.index_map(), spec.widths[:-1], spec.widths[1:]
    ):
        layers.append((params[w_sl].reshape(w_in, w_out), params[b_sl]))
    return layers


def init_params(spec, rng, s_head_bias=None, n_mean_outputs=None):
    """Fan-in scaled uniform weights, zero biases.

    When ``s_head_bias`` is given, the output biases beyond the first
    ``n_mean_outputs`` entries are set to it (used to start a log-variance
    head at a sane value instead of zero).
    """
    params = np.zeros(spec.n_params())
    idx = spec.index_map()
    for (w_sl, b_sl), w_in in zip(idx, spec.widths[:-1]):
        bound = 1.0 / np.sqrt(w_in)
        params[w_sl] = rng.uniform(-bound, bound, size=w_sl.stop - w_sl.start)
    if s_head_bias is not None:
        _, b_sl = idx[-1]
        b = params[b_sl]
        b[n_mean_outputs:] = s_head_bias
        params[b_sl] = b
    return params


def _forward_cached(spec, params, x):
    layers = unflatten(spec, params)
    acts = [x]
    h = x
    for li, (w, b) in enumerate(layers):
        z = h @ w + b
        h = z if li == spec.n_layers - 1 else np.tanh(z)
        acts.append(h)
    return h, acts


def forward(spec, params, x):
    """Evaluate the network on a (D,) vector or an (N, D) batch."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    if xb.ndim != 2 or xb.shape[1] != spec.widths[0]:
        raise DimensionMismatch(
            f"input width {xb.shape[-1]} does not match spec input {spec.widths[0]}"
        )
    out, _ = _forward_cached(spec, params, xb)
    return out[0] if single else out


def _backward_from_cache(spec, params, acts, gout):
    layers = unflatten(spec, params)
    gparams = np.zeros_like(np.asarray(params, dtype=float))
    idx = spec.index_map()
    g = gout
    for li in range(spec.n_layers - 1, -1, -1):
        w, _ = layers[li]
        a_in, a_out = acts[li], acts[li + 1]
        if li != spec.n_layers - 1:
            g = g * (1.0 - a_out * a_out)   # tanh'
        w_sl, b_sl = idx[li]
        gparams[w_sl] = (a_in.T @ g).ravel()
        gparams[b_sl] = g.sum(axis=0)
        g = g @ w.T
    return gparams, g


def backward(spec, params, x, gout):
    """Gradient of a scalar loss with upstream d(loss)/d(out) = ``gout``.

    Returns (parameter gradient, input gradient); batched rows are summed
    into the parameter gradient.
    """
    x = np.asarray(x, dtype=float)
    gout = np.asarray(gout, dtype=float)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    gb = gout[None, :] if single else gout
    if gb.shape != (xb.shape[0], spec.widths[-1]):
        raise DimensionMismatch(
            f"upstream gradient shape {gout.shape} does not match output width"
        )
    _, acts = _forward_cached(spec, params, xb)
    gparams, gx = _backward_from_cache(spec, params, acts, gb)
    return (gparams, gx[0] if single else gx)


@dataclass
class AdamState:
    """Adam optimizer state (beta1=0.9, beta2=0.999, eps=1e-8)."""

    lr: float
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def init(cls, n_params, lr):
        return cls(lr=lr, m=np.zeros(n_params), v=np.zeros(n_params))


def adam_step(state, params, grads):
    """One textbook Adam update; returns (new params, new state)."""
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise DimensionMismatch("params/grads/state length mismatch")
    t = state.step + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    new_params = params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    new_state = AdamState(
        lr=state.lr, m=m, v=v, step=t,
        beta1=state.beta1, beta2=state.beta2, eps=state.eps,
    )
    return new_params, new_state


def params_to_json(spec, params):
    """Flat JSON array plus the slice map that interprets it."""
    doc = {
        "widths": list(spec.widths),
        "index_map": [
            {"weights": [sl.start, sl.stop], "bias": [bs.start, bs.stop]}
            for sl, bs in spec.index_map()
        ],
        "values": np.asarray(params, dtype=float).tolist(),
    }
    return json.dumps(doc)


def params_from_json(text):
    doc = json.loads(text)
    spec = MlpSpec(tuple(doc["widths"]))
    params = np.asarray(doc["values"], dtype=float)
    if params.shape != (spec.n_params(),):
        raise DimensionMismatch("serialized parameter count does not match widths")
    return spec, params
