"""
Reverse-Mode Tape
Records array-valued primitives and propagates adjoints in reverse creation order
"""

from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from phsysid.core.errors import AutodiffError

LEAF_OPS = ("parameter", "state", "constant")


class Node:
    """One recorded primitive: operation kind, parent indices and cached primal value"""

    __slots__ = ("op", "parents", "value", "aux")

    def __init__(self, op: str, parents: Tuple[int, ...], value: np.ndarray, aux: Any = None):
        self.op = op
        self.parents = parents
        self.value = value
        self.aux = aux


class Var:
    """
    Handle to a node on a tape

    Supports the arithmetic operators used by the integrators and models, so code written
    for numpy arrays runs unchanged on tape variables.
    """

    __slots__ = ("tape", "index")
    __array_ufunc__ = None

    def __init__(self, tape: "Tape", index: int):
        self.tape = tape
        self.index = index

    @property
    def value(self) -> np.ndarray:
        return self.tape.nodes[self.index].value

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    def __len__(self) -> int:
        return len(self.value)

    def __repr__(self) -> str:
        return f"Var(index={self.index}, shape={self.shape})"

    # Arithmetic
    def __add__(self, other):
        return self.tape.binary("add", self, other)

    def __radd__(self, other):
        return self.tape.binary("add", other, self)

    def __sub__(self, other):
        return self.tape.binary("sub", self, other)

    def __rsub__(self, other):
        return self.tape.binary("sub", other, self)

    def __mul__(self, other):
        return self.tape.binary("mul", self, other)

    def __rmul__(self, other):
        return self.tape.binary("mul", other, self)

    def __truediv__(self, other):
        if isinstance(other, Var):
            raise AutodiffError("division by a tape variable is not a supported primitive")
        return self.tape.binary("mul", self, 1.0 / np.asarray(other, dtype=float))

    def __neg__(self):
        return self.tape.unary("neg", self)

    def __pow__(self, exponent):
        if isinstance(exponent, Var):
            raise AutodiffError("variable exponents are not a supported primitive")
        return self.tape.unary("pow", self, aux=float(exponent))

    def __matmul__(self, other):
        return self.tape.binary("matmul", self, other)

    def __rmatmul__(self, other):
        return self.tape.binary("matmul", other, self)

    def __getitem__(self, index):
        return self.tape.unary("getitem", self, aux=index)

    def sum(self, axis: Optional[int] = None):
        return self.tape.unary("sum", self, aux=axis)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return self.tape.unary("reshape", self, aux=tuple(shape))


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast adjoint back down to the operand's shape"""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def monomial_values(x: np.ndarray, exponents: np.ndarray) -> np.ndarray:
    """Products of integer powers: out[..., j] = prod_i x[..., i] ** exponents[j, i]"""
    if exponents.shape[0] == 0:
        return np.zeros(x.shape[:-1] + (0,))
    return np.prod(x[..., None, :] ** exponents, axis=-1)


def monomial_jacobian_vjp(x: np.ndarray, exponents: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Vector-Jacobian product of monomial_values with respect to x"""
    out = np.zeros_like(x, dtype=float)
    if exponents.shape[0] == 0:
        return out
    for k in range(x.shape[-1]):
        powers = exponents[:, k]
        if not powers.any():
            continue
        reduced = exponents.copy()
        reduced[:, k] = np.maximum(powers - 1, 0)
        partial = powers * monomial_values(x, reduced)
        out[..., k] = np.sum(grad * partial, axis=-1)
    return out


# Backward rules: (node, adjoint, parent values) -> adjoint per parent
def _vjp_matmul(node, g, a, b):
    if a.ndim == 1 and b.ndim == 1:
        return g * b, g * a
    if a.ndim == 1:
        return b @ g, np.outer(a, g)
    if b.ndim == 1:
        return np.outer(g, b), a.T @ g
    return g @ b.T, a.T @ g


def _vjp_sum(node, g, a):
    axis = node.aux
    if axis is None:
        return (np.broadcast_to(g, a.shape).copy(),)
    return (np.broadcast_to(np.expand_dims(g, axis), a.shape).copy(),)


def _vjp_getitem(node, g, a):
    # flat positions of every selected element, repeats included
    positions = np.arange(a.size).reshape(a.shape)[node.aux]
    weights = np.broadcast_to(g, positions.shape).ravel()
    out = np.bincount(np.ravel(positions), weights=weights, minlength=a.size)
    return (out.reshape(a.shape),)


def _vjp_stack(node, g, *parents):
    axis = node.aux
    return tuple(np.take(g, i, axis=axis) for i in range(len(parents)))


def _vjp_min(node, g, a, b):
    first = a <= b
    return _unbroadcast(g * first, a.shape), _unbroadcast(g * ~first, b.shape)


def _vjp_max(node, g, a, b):
    first = a >= b
    return _unbroadcast(g * first, a.shape), _unbroadcast(g * ~first, b.shape)


_BACKWARD: Dict[str, Callable] = {
    "add": lambda n, g, a, b: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
    "sub": lambda n, g, a, b: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
    "mul": lambda n, g, a, b: (_unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)),
    "neg": lambda n, g, a: (-g,),
    "pow": lambda n, g, a: (g * n.aux * a ** (n.aux - 1.0),),
    "sin": lambda n, g, a: (g * np.cos(a),),
    "cos": lambda n, g, a: (-g * np.sin(a),),
    "relu": lambda n, g, a: (g * (a > 0.0),),
    "abs": lambda n, g, a: (g * np.sign(a),),
    "min": _vjp_min,
    "max": _vjp_max,
    "matmul": _vjp_matmul,
    "sum": _vjp_sum,
    "getitem": _vjp_getitem,
    "stack": _vjp_stack,
    "reshape": lambda n, g, a: (g.reshape(a.shape),),
    "monomials": lambda n, g, x: (monomial_jacobian_vjp(x, n.aux, g),),
}

_FORWARD: Dict[str, Callable] = {
    "add": lambda a, b, aux: a + b,
    "sub": lambda a, b, aux: a - b,
    "mul": lambda a, b, aux: a * b,
    "neg": lambda a, aux: -a,
    "pow": lambda a, aux: a ** aux,
    "sin": lambda a, aux: np.sin(a),
    "cos": lambda a, aux: np.cos(a),
    "relu": lambda a, aux: np.maximum(a, 0.0),
    "abs": lambda a, aux: np.abs(a),
    "min": lambda a, b, aux: np.where(a <= b, a, b),
    "max": lambda a, b, aux: np.where(a >= b, a, b),
    "matmul": lambda a, b, aux: a @ b,
    "sum": lambda a, aux: np.sum(a, axis=aux),
    "getitem": lambda a, aux: a[aux],
    "reshape": lambda a, aux: a.reshape(aux),
    "monomials": lambda x, aux: monomial_values(x, aux),
}

SUPPORTED_OPS = tuple(LEAF_OPS) + tuple(_BACKWARD)


class Tape:
    """
    Append-only record of a computation

    Nodes are stored in creation order, which is a topological order of the graph.
    One tape is built per batch and discarded after the reverse pass.
    """

    def __init__(self):
        self.nodes: List[Node] = []

    def __len__(self) -> int:
        return len(self.nodes)

    def _push(self, op: str, parents: Tuple[int, ...], value, aux: Any = None) -> Var:
        value = np.asarray(value, dtype=float)
        if np.isnan(value).any():
            raise AutodiffError(f"NaN produced by '{op}' at node {len(self.nodes)}", node=len(self.nodes))
        self.nodes.append(Node(op, parents, value, aux))
        return Var(self, len(self.nodes) - 1)

    # Leaves
    def parameter(self, values: Sequence[float]) -> Var:
        """Flat trainable parameter vector; slot i is parameter i"""
        return self._push("parameter", (), np.array(values, dtype=float))

    def state(self, values) -> Var:
        """Data leaf (states or times); receives no gradient of interest"""
        return self._push("state", (), np.array(values, dtype=float))

    def constant(self, values) -> Var:
        return self._push("constant", (), values)

    def lift(self, x) -> Var:
        if isinstance(x, Var):
            if x.tape is not self:
                raise AutodiffError("operands recorded on different tapes")
            return x
        return self.constant(x)

    # Primitive recording
    def unary(self, op: str, a, aux: Any = None) -> Var:
        if op not in _FORWARD:
            raise AutodiffError(f"unsupported primitive '{op}'")
        a = self.lift(a)
        return self._push(op, (a.index,), _FORWARD[op](a.value, aux), aux)

    def binary(self, op: str, a, b, aux: Any = None) -> Var:
        if op not in _FORWARD:
            raise AutodiffError(f"unsupported primitive '{op}'")
        a = self.lift(a)
        b = self.lift(b)
        return self._push(op, (a.index, b.index), _FORWARD[op](a.value, b.value, aux), aux)

    def stack(self, items: Sequence, axis: int = 0) -> Var:
        vars_ = [self.lift(item) for item in items]
        value = np.stack([v.value for v in vars_], axis=axis)
        return self._push("stack", tuple(v.index for v in vars_), value, axis)

    # Reverse pass
    def backward(self, output: Var) -> List[Optional[np.ndarray]]:
        """
        Propagate adjoints from a scalar output

        Args:
            output: Scalar node to differentiate

        Returns:
            Adjoint per node index (None where the node does not influence the output)
        """
        if output.tape is not self:
            raise AutodiffError("output belongs to a different tape")
        if output.value.size != 1:
            raise AutodiffError(f"backward needs a scalar output, got shape {output.shape}")

        adjoints: List[Optional[np.ndarray]] = [None] * len(self.nodes)
        adjoints[output.index] = np.ones_like(output.value)

        for index in range(output.index, -1, -1):
            grad = adjoints[index]
            node = self.nodes[index]
            if grad is None or node.op in LEAF_OPS:
                continue
            rule = _BACKWARD.get(node.op)
            if rule is None:
                raise AutodiffError(f"unsupported primitive '{node.op}'", node=index)
            parent_values = [self.nodes[p].value for p in node.parents]
            for parent, contribution in zip(node.parents, rule(node, grad, *parent_values)):
                if adjoints[parent] is None:
                    adjoints[parent] = np.array(contribution, dtype=float)
                else:
                    adjoints[parent] = adjoints[parent] + contribution
        return adjoints
