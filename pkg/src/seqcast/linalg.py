"""Dense vectors and matrices, adjoints, the Hadamard product and elementwise maps.

Tensors are plain ``numpy.ndarray`` objects of dtype float64, rank 1 (vectors)
or rank 2 (row-major matrices). The helpers here validate shapes and finiteness
at the public boundary; everything downstream assumes validated input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError

__all__ = [
    "ElementwiseFn",
    "IDENTITY",
    "SIGMOID",
    "TANH",
    "RELU",
    "activation",
    "as_vector",
    "as_matrix",
    "inner",
    "hadamard",
    "elementwise_apply",
    "linear_apply",
    "outer",
]


def _check_finite(a: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite entries in tensor")
    return a


def as_vector(v) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64)
    if a.ndim != 1:
        raise DimensionError(f"expected a vector, got shape {a.shape}")
    return _check_finite(a)


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {a.shape}")
    return _check_finite(a)


def inner(a, b) -> float:
    """Frobenius inner product; works for vectors and matrices alike."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"inner product of shapes {a.shape} and {b.shape}")
    return float(np.sum(a * b))


def hadamard(a, b) -> np.ndarray:
    a = as_vector(a)
    b = as_vector(b)
    if a.shape != b.shape:
        raise DimensionError(f"hadamard of lengths {a.size} and {b.size}")
    return a * b


def _sigmoid(z):
    # exp(-|z|) never overflows
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


@dataclass(frozen=True)
class ElementwiseFn:
    """A scalar nonlinearity psi together with psi' and psi''.

    ``relu`` uses psi'(0) = 0 and psi'' = 0 everywhere (subgradient choice).
    """

    kind: str

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ParameterError(f"unknown activation {self.kind!r}; choose from {sorted(_KINDS)}")

    def value(self, z):
        z = np.asarray(z, dtype=np.float64)
        if self.kind == "identity":
            return z.copy()
        if self.kind == "sigmoid":
            return _sigmoid(z)
        if self.kind == "tanh":
            return np.tanh(z)
        return np.maximum(z, 0.0)

    def d1(self, z):
        z = np.asarray(z, dtype=np.float64)
        if self.kind == "identity":
            return np.ones_like(z)
        if self.kind == "sigmoid":
            s = _sigmoid(z)
            return s * (1.0 - s)
        if self.kind == "tanh":
            t = np.tanh(z)
            return 1.0 - t * t
        return (z > 0).astype(np.float64)

    def d2(self, z):
        z = np.asarray(z, dtype=np.float64)
        if self.kind == "sigmoid":
            s = _sigmoid(z)
            return s * (1.0 - s) * (1.0 - 2.0 * s)
        if self.kind == "tanh":
            t = np.tanh(z)
            return -2.0 * t * (1.0 - t * t)
        return np.zeros_like(z)

    def __call__(self, z):
        return self.value(z)


_KINDS = frozenset({"identity", "sigmoid", "tanh", "relu"})

IDENTITY = ElementwiseFn("identity")
SIGMOID = ElementwiseFn("sigmoid")
TANH = ElementwiseFn("tanh")
RELU = ElementwiseFn("relu")


def activation(fn) -> ElementwiseFn:
    """Coerce a name or an ``ElementwiseFn`` into an ``ElementwiseFn``."""
    if isinstance(fn, ElementwiseFn):
        return fn
    return ElementwiseFn(str(fn))


def elementwise_apply(fn, v, order: int = 0) -> np.ndarray:
    """Return Psi(v), Psi'(v) or Psi''(v) coordinatewise for ``order`` 0, 1, 2."""
    fn = activation(fn)
    v = as_vector(v)
    if order == 0:
        return fn.value(v)
    if order == 1:
        return fn.d1(v)
    if order == 2:
        return fn.d2(v)
    raise ParameterError(f"order must be 0, 1 or 2, got {order}")


def linear_apply(L, v, adjoint: bool = False) -> np.ndarray:
    """Apply ``L`` (or its adjoint, the transpose) to ``v``."""
    L = as_matrix(L)
    v = as_vector(v)
    if adjoint:
        if L.shape[0] != v.size:
            raise DimensionError(f"adjoint of {L.shape} applied to length {v.size}")
        return L.T @ v
    if L.shape[1] != v.size:
        raise DimensionError(f"{L.shape} applied to length {v.size}")
    return L @ v


def outer(u, v) -> np.ndarray:
    u = as_vector(u)
    v = as_vector(v)
    return np.outer(u, v)
