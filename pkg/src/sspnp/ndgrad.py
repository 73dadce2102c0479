"""Small define-by-run reverse-mode autodiff over float64 numpy arrays.

The primitive set is just large enough to express an MLP with Gabor,
sine, sigmoid or ReLU activations and a mean-squared-error loss.  Every
forward primitive checks its output for NaN/Inf; every backward rule is
the exact analytic derivative.

    >>> w = Tensor([3.0], requires_grad=True)
    >>> grads = backward(mean(square(w)))
    >>> grads[w]
    array([6.])
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ContractError, DimensionError, NumericError

__all__ = [
    "Tensor", "AdamState", "add", "sub", "mul", "matmul", "exp", "sin",
    "sigmoid", "relu", "negate", "square", "mean", "concat", "broadcast",
    "backward", "adam_step",
]


class Tensor:
    """Graph node holding an immutable float64 value.

    Leaves created with ``requires_grad=True`` receive a ``grad`` array of
    the same shape after :func:`backward`.
    """

    __slots__ = ("data", "grad", "requires_grad", "parents", "backward_rule", "op")

    def __init__(self, data, requires_grad=False, parents=(), backward_rule=None, op="leaf",
                 _owned=False):
        if _owned and isinstance(data, np.ndarray) and data.dtype == np.float64:
            arr = data
        else:
            arr = np.array(data, dtype=np.float64)
        arr.flags.writeable = False
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad) or any(p.requires_grad for p in parents)
        self.parents = tuple(parents)
        self.backward_rule = backward_rule
        self.op = op

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    @property
    def is_leaf(self):
        return not self.parents

    def numpy(self):
        return self.data.copy()

    def item(self):
        if self.data.size != 1:
            raise ContractError(f"item() needs a single element, tensor has shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def backward(self):
        return backward(self)

    def __repr__(self):
        return f"Tensor(op={self.op}, shape={self.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return negate(self)


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(value, parents, rule, op):
    if not np.all(np.isfinite(value)):
        raise NumericError(f"{op} produced non-finite values")
    return Tensor(value, parents=parents, backward_rule=rule, op=op, _owned=True)


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _broadcast_shape(op, *shapes):
    try:
        return np.broadcast_shapes(*shapes)
    except ValueError:
        raise DimensionError(f"{op}: shapes {shapes} are not broadcastable") from None


# -- elementwise binary -----------------------------------------------------

def add(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _broadcast_shape("add", a.shape, b.shape)

    def rule(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _node(a.data + b.data, (a, b), rule, "add")


def sub(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _broadcast_shape("sub", a.shape, b.shape)

    def rule(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _node(a.data - b.data, (a, b), rule, "sub")


def mul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _broadcast_shape("mul", a.shape, b.shape)

    def rule(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _node(a.data * b.data, (a, b), rule, "mul")


def matmul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise DimensionError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul inner dimensions differ: {a.shape} @ {b.shape}")

    def rule(g):
        return g @ b.data.T, a.data.T @ g

    return _node(a.data @ b.data, (a, b), rule, "matmul")


# -- elementwise unary ------------------------------------------------------

def exp(a):
    a = _as_tensor(a)
    with np.errstate(over="ignore"):
        out = np.exp(a.data)

    def rule(g):
        return (g * out,)

    return _node(out, (a,), rule, "exp")


def sin(a):
    a = _as_tensor(a)

    def rule(g):
        return (g * np.cos(a.data),)

    return _node(np.sin(a.data), (a,), rule, "sin")


def _sigmoid(x):
    # tanh form: no overflow for large |x|, exact 0.5 at 0
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def sigmoid(a):
    a = _as_tensor(a)
    out = _sigmoid(a.data)

    def rule(g):
        return (g * out * (1.0 - out),)

    return _node(out, (a,), rule, "sigmoid")


def relu(a):
    a = _as_tensor(a)

    def rule(g):
        return (g * (a.data > 0),)

    return _node(np.maximum(a.data, 0.0), (a,), rule, "relu")


def negate(a):
    a = _as_tensor(a)
    return _node(-a.data, (a,), lambda g: (-g,), "negate")


def square(a):
    a = _as_tensor(a)
    with np.errstate(over="ignore"):
        out = a.data * a.data

    def rule(g):
        return (2.0 * g * a.data,)

    return _node(out, (a,), rule, "square")


# -- shape ops --------------------------------------------------------------

def mean(a, axis=None):
    a = _as_tensor(a)
    out = a.data.mean(axis=axis)
    count = a.data.size if axis is None else a.shape[axis]

    def rule(g):
        g = g if axis is None else np.expand_dims(g, axis)
        return (np.broadcast_to(g / count, a.shape),)

    return _node(out, (a,), rule, "mean")


def concat(tensors, axis=-1):
    tensors = [_as_tensor(t) for t in tensors]
    if not tensors:
        raise DimensionError("concat needs at least one tensor")
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as err:
        raise DimensionError(f"concat: {err}") from None
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def rule(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _node(out, tuple(tensors), rule, "concat")


def broadcast(a, shape):
    a = _as_tensor(a)
    shape = tuple(shape)
    try:
        out = np.broadcast_to(a.data, shape)
    except ValueError:
        raise DimensionError(f"cannot broadcast {a.shape} to {shape}") from None

    def rule(g):
        return (_unbroadcast(g, a.shape),)

    return _node(out, (a,), rule, "broadcast")


# -- reverse pass -----------------------------------------------------------

def _topological_order(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(root):
    """Propagate d(root)/d(node) to every reachable leaf.

    Gradients are accumulated into ``leaf.grad`` and also returned as a
    ``{leaf: grad}`` dict.  ``root`` must hold exactly one element.
    """
    if root.size != 1:
        raise ContractError(f"backward needs a scalar root, got shape {root.shape}")
    grads = {id(root): np.ones(root.shape)}
    leaves = {}
    for node in reversed(_topological_order(root)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.is_leaf:
            if node.requires_grad:
                node.grad = g.copy() if node.grad is None else node.grad + g
                leaves[node] = node.grad
            continue
        for parent, pg in zip(node.parents, node.backward_rule(g)):
            if not parent.requires_grad:
                continue
            key = id(parent)
            grads[key] = pg if key not in grads else grads[key] + pg
    return leaves


# -- optimizer --------------------------------------------------------------

@dataclass
class AdamState:
    """Bias-corrected Adam moments; ``m`` and ``v`` align with the param list."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def adam_step(state, params):
    """Apply one Adam update to ``params`` in place and zero their grads."""
    missing = [i for i, p in enumerate(params) if p.grad is None]
    if missing:
        raise ContractError(f"parameters {missing} have no gradient; call backward first")
    if not state.m:
        state.m = [np.zeros(p.shape) for p in params]
        state.v = [np.zeros(p.shape) for p in params]
    elif len(state.m) != len(params):
        raise ContractError("parameter list changed length between Adam steps")
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for i, p in enumerate(params):
        g = p.grad
        if not np.all(np.isfinite(g)):
            raise NumericError(f"gradient of parameter {i} is non-finite")
        if g.shape != p.shape:
            raise DimensionError(f"grad shape {g.shape} != param shape {p.shape}")
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g
        update = state.lr * (state.m[i] / c1) / (np.sqrt(state.v[i] / c2) + state.epsilon)
        new = p.data - update
        if not (np.all(np.isfinite(state.v[i])) and np.all(np.isfinite(new))):
            raise NumericError(f"Adam update of parameter {i} overflowed")
        new.flags.writeable = False
        p.data = new
        p.grad = None
    return params
