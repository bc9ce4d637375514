"""
Array Operations
Primitives that record on a tape when given a Var and evaluate plain numpy otherwise
"""

from typing import Optional, Sequence

import numpy as np

from .tape import Var, monomial_values


def is_var(x) -> bool:
    return isinstance(x, Var)


def _tape_of(*xs):
    for x in xs:
        if isinstance(x, Var):
            return x.tape
    return None


def asarray(x):
    """Pass tape variables through; convert everything else to a float array"""
    return x if isinstance(x, Var) else np.asarray(x, dtype=float)


def sin(x):
    return x.tape.unary("sin", x) if isinstance(x, Var) else np.sin(x)


def cos(x):
    return x.tape.unary("cos", x) if isinstance(x, Var) else np.cos(x)


def relu(x):
    return x.tape.unary("relu", x) if isinstance(x, Var) else np.maximum(x, 0.0)


def abs_(x):
    return x.tape.unary("abs", x) if isinstance(x, Var) else np.abs(x)


def minimum(a, b):
    """Elementwise minimum; ties select the first argument"""
    tape = _tape_of(a, b)
    if tape is not None:
        return tape.binary("min", a, b)
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return np.where(a <= b, a, b)


def maximum(a, b):
    """Elementwise maximum; ties select the first argument"""
    tape = _tape_of(a, b)
    if tape is not None:
        return tape.binary("max", a, b)
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return np.where(a >= b, a, b)


def matmul(a, b):
    tape = _tape_of(a, b)
    if tape is not None:
        return tape.binary("matmul", a, b)
    return np.asarray(a, dtype=float) @ np.asarray(b, dtype=float)


def sum_(x, axis: Optional[int] = None):
    return x.sum(axis=axis) if isinstance(x, Var) else np.sum(x, axis=axis)


def mean(x, axis: Optional[int] = None):
    shape = x.shape
    count = int(np.prod(shape)) if axis is None else shape[axis]
    return sum_(x, axis=axis) * (1.0 / count)


def stack(items: Sequence, axis: int = 0):
    tape = _tape_of(*items)
    if tape is not None:
        return tape.stack(items, axis=axis)
    return np.stack([np.asarray(item, dtype=float) for item in items], axis=axis)


def reshape(x, shape):
    return x.reshape(shape) if isinstance(x, Var) else np.reshape(x, shape)


def monomials(x, exponents: np.ndarray):
    """
    Evaluate a monomial basis

    Args:
        x: States with trailing dimension d
        exponents: Integer matrix (n_terms, d)

    Returns:
        Array (..., n_terms) of term values
    """
    exponents = np.asarray(exponents, dtype=int)
    if isinstance(x, Var):
        return x.tape.unary("monomials", x, aux=exponents)
    return monomial_values(np.asarray(x, dtype=float), exponents)
