"""Reverse-mode automatic differentiation over numpy arrays.

The op set is exactly what the video models need: elementwise arithmetic,
conv2d, pixel shuffle, gelu/sigmoid, L1/L2 losses, plus reshape and
nearest-neighbor 2x upsampling.  No broadcasting beyond scalars, no GPU.

Gradients accumulate additively; zeroing is the optimizer's job.  A
``precision`` context switches between single (training default) and
double (used by the finite-difference test suites).
"""

from contextlib import contextmanager

import numpy as np

from . import backend
from .errors import ContractError, InvalidShapeError

_MODES = {"single": np.float32, "double": np.float64}
_state = {"dtype": np.float32}


def default_dtype():
    """dtype new tensors are created with."""
    return _state["dtype"]


@contextmanager
def precision(mode):
    """Temporarily set the creation precision: "single" or "double"."""
    if mode not in _MODES:
        raise ContractError(f"unknown precision mode {mode!r}")
    prev = _state["dtype"]
    _state["dtype"] = _MODES[mode]
    try:
        yield
    finally:
        _state["dtype"] = prev


class Tensor:
    """N-d array with optional gradient buffer and tape record.

    ``trainable`` marks leaf parameters; ``requires_grad`` propagates to
    results whose ancestry contains a trainable leaf.  ``backward`` walks
    the recorded graph once in reverse topological order.
    """

    __slots__ = ("data", "grad", "trainable", "requires_grad", "_parents", "_backward")

    def __init__(self, data, trainable=False):
        # np.array copies: in-place parameter updates must never alias caller arrays
        self.data = np.array(data, dtype=default_dtype())
        self.grad = None
        self.trainable = trainable
        self.requires_grad = trainable
        self._parents = ()
        self._backward = None

    @classmethod
    def _result(cls, data, parents, backward_fn):
        out = cls.__new__(cls)
        out.data = data
        out.grad = None
        out.trainable = False
        out.requires_grad = any(p.requires_grad for p in parents)
        if out.requires_grad:
            out._parents = tuple(parents)
            out._backward = backward_fn
        else:
            out._parents = ()
            out._backward = None
        return out

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def item(self):
        return float(self.data.reshape(-1)[0])

    def set_trainable(self, flag):
        """Toggle leaf trainability; requires_grad tracks it for leaves."""
        if self._parents:
            raise ContractError("only leaf tensors can change trainability")
        self.trainable = bool(flag)
        self.requires_grad = self.trainable

    def __repr__(self):
        flag = ", trainable" if self.trainable else ""
        return f"Tensor(shape={tuple(self.shape)}, dtype={self.data.dtype.name}{flag})"

    def backward(self):
        """Populate grads of all trainable ancestors of this scalar root.

        Leaf gradients accumulate across calls; non-leaf grads are reset
        per pass so each call contributes exactly one traversal.
        """
        if self.data.size != 1:
            raise ContractError(f"backward root must be scalar, got shape {tuple(self.shape)}")
        if not self.requires_grad:
            return
        topo = []
        visited = {id(self)}
        stack = [(self, iter(self._parents))]
        while stack:
            node, parents = stack[-1]
            for p in parents:
                if p.requires_grad and id(p) not in visited:
                    visited.add(id(p))
                    stack.append((p, iter(p._parents)))
                    break
            else:
                topo.append(node)
                stack.pop()
        for node in topo:
            if node._backward is not None:
                node.grad = None
        if self._backward is None:
            _accum(self, np.ones_like(self.data))
            return
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward()

    # Operator sugar over the module-level ops.
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])


def _accum(t, g, owned=False):
    # owned=True means g is a fresh array the caller will not touch again.
    if t.grad is None:
        t.grad = g if owned else g.copy()
    else:
        t.grad += g


def _check_same_dtype(*tensors):
    dt = tensors[0].data.dtype
    for t in tensors[1:]:
        if t.data.dtype != dt:
            raise ContractError(
                f"mixed precision in one computation: {dt.name} vs {t.data.dtype.name}"
            )


def _as_elementwise_pair(a, b, op_name):
    if not isinstance(a, Tensor):
        raise ContractError(f"{op_name}: first operand must be a Tensor")
    if isinstance(b, Tensor):
        if a.shape != b.shape:
            raise InvalidShapeError(f"{op_name}: shapes {a.shape} and {b.shape} differ")
        _check_same_dtype(a, b)
        return a, b, None
    return a, None, a.data.dtype.type(b)


def add(a, b):
    a, bt, bs = _as_elementwise_pair(a, b, "add")
    if bt is None:
        out = Tensor._result(a.data + bs, (a,), None)

        def _bw():
            _accum(a, out.grad)

    else:
        out = Tensor._result(a.data + bt.data, (a, bt), None)

        def _bw():
            if a.requires_grad:
                _accum(a, out.grad)
            if bt.requires_grad:
                _accum(bt, out.grad)

    out._backward = _bw if out.requires_grad else None
    return out


def sub(a, b):
    a, bt, bs = _as_elementwise_pair(a, b, "sub")
    if bt is None:
        out = Tensor._result(a.data - bs, (a,), None)

        def _bw():
            _accum(a, out.grad)

    else:
        out = Tensor._result(a.data - bt.data, (a, bt), None)

        def _bw():
            if a.requires_grad:
                _accum(a, out.grad)
            if bt.requires_grad:
                _accum(bt, -out.grad, owned=True)

    out._backward = _bw if out.requires_grad else None
    return out


def mul(a, b):
    a, bt, bs = _as_elementwise_pair(a, b, "mul")
    if bt is None:
        out = Tensor._result(a.data * bs, (a,), None)

        def _bw():
            _accum(a, out.grad * bs, owned=True)

    else:
        out = Tensor._result(a.data * bt.data, (a, bt), None)

        def _bw():
            if a.requires_grad:
                _accum(a, out.grad * bt.data, owned=True)
            if bt.requires_grad:
                _accum(bt, out.grad * a.data, owned=True)

    out._backward = _bw if out.requires_grad else None
    return out


def scale(a, s):
    """Multiply by a python scalar."""
    if isinstance(s, Tensor):
        raise ContractError("scale takes a plain scalar; use mul for tensor operands")
    return mul(a, s)


def reshape(x, shape):
    old = x.data.shape
    out = Tensor._result(x.data.reshape(shape), (x,), None)

    def _bw():
        _accum(x, out.grad.reshape(old))

    out._backward = _bw if out.requires_grad else None
    return out


def conv2d(x, weight, bias, stride=1, padding=0):
    """Cross-correlation with zero padding.

    x: (B, Cin, H, W); weight: (Cout, Cin, kh, kw); bias: (Cout,).
    Output (B, Cout, H', W') with H' = (H + 2p - kh)//stride + 1.
    """
    if x.data.ndim != 4 or weight.data.ndim != 4 or bias.data.ndim != 1:
        raise InvalidShapeError(
            f"conv2d expects 4d input/weight and 1d bias, got "
            f"{x.data.ndim}d/{weight.data.ndim}d/{bias.data.ndim}d"
        )
    b_, cin, h, w = x.shape
    cout, cin_w, kh, kw = weight.shape
    if cin != cin_w:
        raise InvalidShapeError(f"conv2d channel mismatch: input {cin}, weight {cin_w}")
    if bias.shape[0] != cout:
        raise InvalidShapeError(f"conv2d bias length {bias.shape[0]} != {cout} filters")
    if kh % 2 == 0 or kw % 2 == 0:
        raise ContractError(f"conv2d kernel dims must be odd, got {kh}x{kw}")
    if stride < 1:
        raise ContractError(f"conv2d stride must be >= 1, got {stride}")
    if h + 2 * padding < kh or w + 2 * padding < kw:
        raise ContractError(
            f"conv2d kernel {kh}x{kw} exceeds padded input {h + 2 * padding}x{w + 2 * padding}"
        )
    _check_same_dtype(x, weight, bias)

    hp = (h + 2 * padding - kh) // stride + 1
    wp = (w + 2 * padding - kw) // stride + 1
    cols = backend.im2col(x.data, kh, kw, stride, padding)
    w2 = weight.data.reshape(cout, -1)
    res = np.matmul(w2, cols)
    res += bias.data.reshape(1, cout, 1)
    out = Tensor._result(res.reshape(b_, cout, hp, wp), (x, weight, bias), None)
    del cols

    def _bw():
        g = out.grad.reshape(b_, cout, hp * wp)
        if bias.requires_grad:
            _accum(bias, g.sum(axis=(0, 2)), owned=True)
        if weight.requires_grad:
            # recompute instead of saving: keeps the live set small enough to
            # stay cache resident, which matters more than the extra im2col
            cols = backend.im2col(x.data, kh, kw, stride, padding)
            gw = np.matmul(g, cols.transpose(0, 2, 1)).sum(axis=0)
            _accum(weight, gw.reshape(weight.data.shape), owned=True)
        if x.requires_grad:
            gcols = np.matmul(w2.T, g)
            gx = backend.col2im(gcols, cin, h, w, kh, kw, stride, padding)
            _accum(x, gx, owned=True)

    out._backward = _bw if out.requires_grad else None
    return out


def pixel_shuffle(x, r):
    """Rearrange (B, C*r*r, H, W) -> (B, C, r*H, r*W)."""
    if x.data.ndim != 4:
        raise InvalidShapeError(f"pixel_shuffle expects a 4d tensor, got {x.data.ndim}d")
    if x.shape[1] % (r * r) != 0:
        raise InvalidShapeError(f"pixel_shuffle: {x.shape[1]} channels not divisible by {r * r}")
    out = Tensor._result(backend.pixel_shuffle(x.data, r), (x,), None)

    def _bw():
        _accum(x, backend.pixel_unshuffle(out.grad, r), owned=True)

    out._backward = _bw if out.requires_grad else None
    return out


def pixel_unshuffle(x, r):
    """Exact inverse of :func:`pixel_shuffle`."""
    if x.data.ndim != 4:
        raise InvalidShapeError(f"pixel_unshuffle expects a 4d tensor, got {x.data.ndim}d")
    if x.shape[2] % r != 0 or x.shape[3] % r != 0:
        raise InvalidShapeError(
            f"pixel_unshuffle: spatial dims {x.shape[2]}x{x.shape[3]} not divisible by {r}"
        )
    out = Tensor._result(backend.pixel_unshuffle(x.data, r), (x,), None)

    def _bw():
        _accum(x, backend.pixel_shuffle(out.grad, r), owned=True)

    out._backward = _bw if out.requires_grad else None
    return out


_GELU_C = 0.7978845608028654  # sqrt(2/pi)
_GELU_A = 0.044715


def gelu(x):
    """Tanh-approximation GELU."""
    xd = x.data
    inner = _GELU_C * (xd + _GELU_A * xd * xd * xd)
    t = np.tanh(inner)
    out = Tensor._result(0.5 * xd * (1.0 + t), (x,), None)

    def _bw():
        dinner = _GELU_C * (1.0 + 3.0 * _GELU_A * xd * xd)
        local = 0.5 * (1.0 + t) + 0.5 * xd * (1.0 - t * t) * dinner
        _accum(x, out.grad * local, owned=True)

    out._backward = _bw if out.requires_grad else None
    return out


def sigmoid(x):
    """Logistic function, overflow-safe for large |x|."""
    xd = x.data
    e = np.exp(-np.abs(xd))
    pos = 1.0 / (1.0 + e)
    s = np.where(xd >= 0, pos, 1.0 - pos)
    out = Tensor._result(s, (x,), None)

    def _bw():
        _accum(x, out.grad * (s * (1.0 - s)), owned=True)

    out._backward = _bw if out.requires_grad else None
    return out


def _check_loss_args(pred, target, name):
    if pred.shape != target.shape:
        raise InvalidShapeError(f"{name}: shapes {pred.shape} and {target.shape} differ")
    if target.requires_grad:
        raise ContractError(f"{name}: target must not require gradients")
    _check_same_dtype(pred, target)


def l1_loss(pred, target):
    """mean(|pred - target|), scalar."""
    _check_loss_args(pred, target, "l1_loss")
    d = pred.data - target.data
    out = Tensor._result(np.asarray(np.abs(d).mean()), (pred,), None)

    def _bw():
        _accum(pred, out.grad * (np.sign(d) / d.size), owned=True)

    out._backward = _bw if out.requires_grad else None
    return out


def l2_loss(pred, target):
    """mean((pred - target)^2), scalar."""
    _check_loss_args(pred, target, "l2_loss")
    d = pred.data - target.data
    out = Tensor._result(np.asarray((d * d).mean()), (pred,), None)

    def _bw():
        _accum(pred, out.grad * (2.0 * d / d.size), owned=True)

    out._backward = _bw if out.requires_grad else None
    return out


def upsample2x_nearest(x):
    """(B, C, H, W) -> (B, C, 2H, 2W) by pixel repetition."""
    if x.data.ndim != 4:
        raise InvalidShapeError(f"upsample2x_nearest expects a 4d tensor, got {x.data.ndim}d")
    out = Tensor._result(backend.upsample2x_nearest(x.data), (x,), None)

    def _bw():
        _accum(x, backend.downsum2x(out.grad), owned=True)

    out._backward = _bw if out.requires_grad else None
    return out
