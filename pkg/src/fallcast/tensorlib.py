"""Dense float64 tensors with reverse-mode differentiation.

Covers exactly the operations the fall-anticipation networks need: affine
maps, LSTM gate arithmetic, graph aggregation through incidence matrices,
depthwise temporal convolution, dropout, and the two losses.  Everything is
64-bit and deterministic given a seeded ``numpy.random.Generator``.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "no_grad",
    "backward",
    "xavier_init",
    "add",
    "mul",
    "linear",
    "lstm_layer",
    "reshape",
    "matmul",
    "sigmoid",
    "tanh",
    "relu",
    "concat",
    "slice_axis",
    "dropout",
    "channel_linear",
    "nodes_from_edges",
    "edges_from_nodes",
    "temporal_depthwise_conv",
    "mean_pool_graph",
    "mean_all",
    "sum_all",
    "smooth_l1",
    "cross_entropy",
    "softmax",
]

_GRAD_ENABLED = True


class no_grad:
    """Context manager that disables graph recording (inference mode)."""

    def __enter__(self):
        global _GRAD_ENABLED
        self._prev = _GRAD_ENABLED
        _GRAD_ENABLED = False
        return self

    def __exit__(self, *exc):
        global _GRAD_ENABLED
        _GRAD_ENABLED = self._prev
        return False


class Tensor:
    """A node in the computation graph wrapping a float64 ndarray."""

    __slots__ = ("data", "grad", "requires_grad", "parents", "backward_fn", "name")

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        arr = np.asarray(data, dtype=np.float64)
        if not arr.flags["C_CONTIGUOUS"]:
            arr = np.ascontiguousarray(arr)
        self.data = arr
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.parents: tuple = ()
        self.backward_fn: Optional[Callable[[np.ndarray], tuple]] = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.data.shape}, grad={self.requires_grad})"


def _make(data: np.ndarray, parents: Sequence[Tensor], backward_fn) -> Tensor:
    """Wrap an op result, recording the edge only when gradients can flow."""
    out = Tensor(data)
    if _GRAD_ENABLED and any(p.requires_grad or p.backward_fn is not None for p in parents):
        out.parents = tuple(parents)
        out.backward_fn = backward_fn
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# arithmetic


def add(a: Tensor, b: Tensor) -> Tensor:
    data = a.data + b.data
    return _make(data, (a, b), lambda g: (_unbroadcast(g, a.data.shape),
                                          _unbroadcast(g, b.data.shape)))


def mul(a: Tensor, b: Tensor) -> Tensor:
    data = a.data * b.data
    return _make(data, (a, b), lambda g: (_unbroadcast(g * b.data, a.data.shape),
                                          _unbroadcast(g * a.data, b.data.shape)))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ValueError("matmul expects 2-D operands")
    data = a.data @ b.data
    return _make(data, (a, b), lambda g: (g @ b.data.T, a.data.T @ g))


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """Affine map ``x @ weight.T (+ bias)`` with x of shape (B, D)."""
    if x.data.ndim != 2:
        raise ValueError(f"linear expects (B, D) input, got {x.data.shape}")
    if weight.data.ndim != 2 or weight.data.shape[1] != x.data.shape[1]:
        raise ValueError(f"weight {weight.data.shape} does not match input {x.data.shape}")
    data = x.data @ weight.data.T
    if bias is not None:
        data += bias.data

    if bias is None:
        return _make(data, (x, weight),
                     lambda g: (g @ weight.data, g.T @ x.data))
    return _make(data, (x, weight, bias),
                 lambda g: (g @ weight.data, g.T @ x.data, g.sum(axis=0)))


def sigmoid(x: Tensor) -> Tensor:
    # Split by sign for overflow-free evaluation.
    d = x.data
    out = np.empty_like(d)
    pos = d >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-d[pos]))
    ex = np.exp(d[~pos])
    out[~pos] = ex / (1.0 + ex)
    return _make(out, (x,), lambda g: (g * out * (1.0 - out),))


def tanh(x: Tensor) -> Tensor:
    out = np.tanh(x.data)
    return _make(out, (x,), lambda g: (g * (1.0 - out * out),))


def relu(x: Tensor) -> Tensor:
    out = np.maximum(x.data, 0.0)
    return _make(out, (x,), lambda g: (g * (x.data > 0.0),))


def concat(tensors: Sequence[Tensor], axis: int) -> Tensor:
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    bounds = np.cumsum([0] + sizes)

    def bwd(g):
        return tuple(np.take(g, np.arange(bounds[i], bounds[i + 1]), axis=axis)
                     for i in range(len(sizes)))

    return _make(data, tuple(tensors), bwd)


def slice_axis(x: Tensor, axis: int, start: int, stop: int) -> Tensor:
    index = [slice(None)] * x.data.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)
    data = x.data[index]

    def bwd(g):
        full = np.zeros_like(x.data)
        full[index] = g
        return (full,)

    return _make(data, (x,), bwd)


def reshape(x: Tensor, shape: tuple) -> Tensor:
    data = x.data.reshape(shape)
    return _make(data, (x,), lambda g: (g.reshape(x.data.shape),))


def lstm_layer(inputs: Tensor, wx: Tensor, wh: Tensor, b: Tensor) -> Tensor:
    """Run one LSTM layer over (B, T, D) inputs from a zero state -> (B, T, H).

    The whole unrolled loop is a single graph node with a hand-written
    backward-through-time pass; gate order is i, f, g, o.
    """
    x, wxd, whd, bd = inputs.data, wx.data, wh.data, b.data
    if x.ndim != 3:
        raise ValueError(f"lstm_layer expects (B, T, D) inputs, got {x.shape}")
    bsz, steps, d_in = x.shape
    hidden = whd.shape[1]
    if wxd.shape != (4 * hidden, d_in) or bd.shape != (4 * hidden,):
        raise ValueError(f"weight shapes {wxd.shape}/{whd.shape}/{bd.shape} do not "
                         f"match input width {d_in} and hidden size {hidden}")

    proj = x.reshape(bsz * steps, d_in) @ wxd.T
    proj += bd
    proj = proj.reshape(bsz, steps, 4 * hidden)
    h = np.zeros((bsz, hidden))
    c = np.zeros((bsz, hidden))
    outputs = np.empty((bsz, steps, hidden))
    gates = np.empty((bsz, steps, 4 * hidden))   # i, f, g, o post-activation
    tanh_c = np.empty((bsz, steps, hidden))
    cells = np.empty((bsz, steps, hidden))
    for t in range(steps):
        z = proj[:, t] + h @ whd.T
        i = _sigmoid_arr(z[:, :hidden])
        f = _sigmoid_arr(z[:, hidden:2 * hidden])
        g = np.tanh(z[:, 2 * hidden:3 * hidden])
        o = _sigmoid_arr(z[:, 3 * hidden:])
        c = f * c + i * g
        tc = np.tanh(c)
        h = o * tc
        outputs[:, t] = h
        cells[:, t] = c
        tanh_c[:, t] = tc
        gates[:, t, :hidden] = i
        gates[:, t, hidden:2 * hidden] = f
        gates[:, t, 2 * hidden:3 * hidden] = g
        gates[:, t, 3 * hidden:] = o

    def bwd(grad):
        d_wx = np.zeros_like(wxd)
        d_wh = np.zeros_like(whd)
        d_b = np.zeros_like(bd)
        d_x = np.empty_like(x)
        dh_rec = np.zeros((bsz, hidden))
        dc_rec = np.zeros((bsz, hidden))
        dz = np.empty((bsz, 4 * hidden))
        for t in range(steps - 1, -1, -1):
            i = gates[:, t, :hidden]
            f = gates[:, t, hidden:2 * hidden]
            g = gates[:, t, 2 * hidden:3 * hidden]
            o = gates[:, t, 3 * hidden:]
            tc = tanh_c[:, t]
            c_prev = cells[:, t - 1] if t > 0 else np.zeros((bsz, hidden))
            dh = grad[:, t] + dh_rec
            dc = dc_rec + dh * o * (1.0 - tc * tc)
            dz[:, :hidden] = dc * g * i * (1.0 - i)
            dz[:, hidden:2 * hidden] = dc * c_prev * f * (1.0 - f)
            dz[:, 2 * hidden:3 * hidden] = dc * i * (1.0 - g * g)
            dz[:, 3 * hidden:] = dh * tc * o * (1.0 - o)
            h_prev = outputs[:, t - 1] if t > 0 else np.zeros((bsz, hidden))
            d_wh += dz.T @ h_prev
            d_wx += dz.T @ x[:, t]
            d_b += dz.sum(axis=0)
            d_x[:, t] = dz @ wxd
            dh_rec = dz @ whd
            dc_rec = dc * f
        return d_x, d_wx, d_wh, d_b

    return _make(outputs, (inputs, wx, wh, b), bwd)


def _sigmoid_arr(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def dropout(x: Tensor, p: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout; call only on the training path."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability {p} outside [0, 1)")
    if p == 0.0:
        return x
    scale = 1.0 / (1.0 - p)
    mask = (rng.random(x.data.shape) >= p) * scale
    return _make(x.data * mask, (x,), lambda g: (g * mask,))


# ---------------------------------------------------------------------------
# graph-network operations (features laid out as (B, C, N, T))


def channel_linear(weight: Tensor, bias: Tensor, x: Tensor) -> Tensor:
    """Mix channels with a (C_out, C_in) matrix on (B, C_in, N, T) features."""
    w, b, d = weight.data, bias.data, x.data
    out = np.moveaxis(np.tensordot(w, d, axes=([1], [1])), 0, 1)
    out += b[None, :, None, None]

    def bwd(g):
        gw = np.tensordot(g, d, axes=([0, 2, 3], [0, 2, 3]))
        gb = g.sum(axis=(0, 2, 3))
        gx = np.moveaxis(np.tensordot(w.T, g, axes=([1], [1])), 0, 1)
        return gw, gb, gx

    return _make(out, (weight, bias, x), bwd)


def nodes_from_edges(a: Tensor, edges: Tensor) -> Tensor:
    """Aggregate edge features onto nodes: (V, E) x (B, C, E, T) -> (B, C, V, T)."""
    ad, ed = a.data, edges.data
    out = np.moveaxis(np.tensordot(ad, ed, axes=([1], [2])), (0, 1, 2), (2, 0, 1))

    def bwd(g):
        ga = np.tensordot(g, ed, axes=([0, 1, 3], [0, 1, 3]))
        ge = np.moveaxis(np.tensordot(ad.T, g, axes=([1], [2])), (0, 1, 2), (2, 0, 1))
        return ga, ge

    return _make(out, (a, edges), bwd)


def edges_from_nodes(a: Tensor, nodes: Tensor) -> Tensor:
    """Gather node features onto edges: (V, E)^T x (B, C, V, T) -> (B, C, E, T)."""
    ad, nd = a.data, nodes.data
    out = np.moveaxis(np.tensordot(ad.T, nd, axes=([1], [2])), (0, 1, 2), (2, 0, 1))

    def bwd(g):
        ga = np.tensordot(nd, g, axes=([0, 1, 3], [0, 1, 3]))
        gn = np.moveaxis(np.tensordot(ad, g, axes=([1], [2])), (0, 1, 2), (2, 0, 1))
        return ga, gn

    return _make(out, (a, nodes), bwd)


def temporal_depthwise_conv(kernel: Tensor, bias: Tensor, x: Tensor) -> Tensor:
    """Per-channel 1-D convolution along the last (time) axis, same padding.

    ``kernel`` is (C, K) with K odd; the same C filters apply at every node.
    """
    kd, bd, d = kernel.data, bias.data, x.data
    c, k = kd.shape
    if k % 2 != 1:
        raise ValueError("temporal kernel length must be odd for same padding")
    if d.shape[1] != c:
        raise ValueError(f"kernel channels {c} do not match features {d.shape}")
    half = k // 2
    t = d.shape[3]
    pad = np.pad(d, ((0, 0), (0, 0), (0, 0), (half, half)))
    out = np.zeros_like(d)
    for j in range(k):
        out += kd[None, :, None, j:j + 1] * pad[..., j:j + t]
    out += bd[None, :, None, None]

    def bwd(g):
        gk = np.empty_like(kd)
        for j in range(k):
            gk[:, j] = np.einsum("bcnt,bcnt->c", g, pad[..., j:j + t])
        gb = g.sum(axis=(0, 2, 3))
        gpad = np.zeros_like(pad)
        for j in range(k):
            gpad[..., j:j + t] += kd[None, :, None, j:j + 1] * g
        gx = gpad[..., half:half + t]
        return gk, gb, gx

    return _make(out, (kernel, bias, x), bwd)


def mean_pool_graph(x: Tensor) -> Tensor:
    """Average (B, C, N, T) over nodes and time -> (B, C)."""
    n = x.data.shape[2] * x.data.shape[3]
    out = x.data.mean(axis=(2, 3))

    def bwd(g):
        return (np.broadcast_to(g[:, :, None, None] / n, x.data.shape).copy(),)

    return _make(out, (x,), bwd)


def sum_all(x: Tensor) -> Tensor:
    out = np.asarray(x.data.sum())
    return _make(out, (x,), lambda g: (np.broadcast_to(g, x.data.shape).copy(),))


def mean_all(x: Tensor) -> Tensor:
    n = x.data.size
    out = np.asarray(x.data.mean())
    return _make(out, (x,), lambda g: (np.broadcast_to(g / n, x.data.shape).copy(),))


# ---------------------------------------------------------------------------
# losses


def smooth_l1(prediction: Tensor, target: Tensor) -> Tensor:
    """Mean smooth-L1 (Huber, delta=1) between equal-shaped tensors."""
    if prediction.data.shape != target.data.shape:
        raise ValueError(
            f"smooth_l1 shape mismatch: {prediction.data.shape} vs {target.data.shape}")
    d = prediction.data - target.data
    absd = np.abs(d)
    per = np.where(absd < 1.0, 0.5 * d * d, absd - 0.5)
    n = d.size
    out = np.asarray(per.mean())

    def bwd(g):
        gd = np.clip(d, -1.0, 1.0) * (g / n)
        return gd, -gd

    return _make(out, (prediction, target), bwd)


def cross_entropy(logits: Tensor, labels) -> Tensor:
    """Mean negative log softmax probability of the true class.

    ``logits`` is (C,) or (B, C); ``labels`` a class index or an int array.
    """
    d = logits.data
    squeeze = d.ndim == 1
    if squeeze:
        d = d[None, :]
    if d.ndim != 2:
        raise ValueError(f"cross_entropy expects (C,) or (B, C) logits, got {logits.data.shape}")
    b, c = d.shape
    if c < 2:
        raise ValueError("cross_entropy needs at least 2 classes")
    y = np.atleast_1d(np.asarray(labels, dtype=np.intp))
    if y.shape != (b,):
        raise ValueError(f"labels shape {y.shape} does not match batch {b}")
    if np.any(y < 0) or np.any(y >= c):
        raise ValueError(f"label out of range for {c} classes")

    m = d.max(axis=1, keepdims=True)
    ex = np.exp(d - m)
    lse = m[:, 0] + np.log(ex.sum(axis=1))
    out = np.asarray((lse - d[np.arange(b), y]).mean())

    def bwd(g):
        p = ex / ex.sum(axis=1, keepdims=True)
        p[np.arange(b), y] -= 1.0
        gl = p * (g / b)
        return (gl[0] if squeeze else gl,)

    return _make(out, (logits,), bwd)


def softmax(values: np.ndarray, axis: int = -1) -> np.ndarray:
    """Plain numpy softmax for inference outputs."""
    m = values.max(axis=axis, keepdims=True)
    ex = np.exp(values - m)
    return ex / ex.sum(axis=axis, keepdims=True)


# ---------------------------------------------------------------------------
# backward pass


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(param) into ``.grad`` of every reachable parameter."""
    if loss.data.size != 1:
        raise ValueError(f"backward needs a scalar loss, got shape {loss.data.shape}")

    order: list[Tensor] = []
    seen = set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.requires_grad:
            if node.grad is None:
                node.grad = np.zeros_like(node.data)
            node.grad += g.reshape(node.data.shape)
        if node.backward_fn is None:
            continue
        parent_grads = node.backward_fn(g)
        for parent, pg in zip(node.parents, parent_grads):
            if pg is None:
                continue
            key = id(parent)
            if key in grads:
                grads[key] += pg
            else:
                grads[key] = pg


# ---------------------------------------------------------------------------
# initialization


def xavier_init(fan_in: int, fan_out: int, rng: np.random.Generator) -> Tensor:
    """Zero-mean normal draw with variance 2 / (fan_in + fan_out), shape (fan_out, fan_in)."""
    if fan_in <= 0 or fan_out <= 0:
        raise ValueError(f"fans must be positive, got ({fan_in}, {fan_out})")
    std = np.sqrt(2.0 / (fan_in + fan_out))
    return Tensor(rng.normal(0.0, std, size=(fan_out, fan_in)))
