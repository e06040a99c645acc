"""
Double-well energy f(X) = |X - X1|^2 |X - X2|^2 and its special cases.

Matrix arguments may be stacks of shape (..., n, n); results then have
shape (...). The wells themselves are always single matrices.
"""
from dataclasses import dataclass, field
from typing import Any, Dict

import numpy as np
from typing_extensions import Self

from core.matrix import (
    as_matrix,
    frobenius_inner,
    frobenius_norm_sq,
    matrix_from_json,
    matrix_to_json,
    s2,
    skew_part,
    trace,
)
from utils.errors import DimensionMismatchError, MatrixValidationError


@dataclass(frozen=True, eq=False)
class DoubleWell:
    """The well pair (X1, X2) with A = (X1 - X2)/2 and B = (X1 + X2)/2"""
    X1: np.ndarray
    X2: np.ndarray
    A: np.ndarray = field(init=False, repr=False)
    B: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        X1 = as_matrix(self.X1, "X1")
        X2 = as_matrix(self.X2, "X2")
        if X1.shape != X2.shape:
            raise DimensionMismatchError(f"wells differ in dimension: {X1.shape} vs {X2.shape}")
        object.__setattr__(self, "X1", X1)
        object.__setattr__(self, "X2", X2)
        object.__setattr__(self, "A", 0.5 * (X1 - X2))
        object.__setattr__(self, "B", 0.5 * (X1 + X2))

    @property
    def n(self) -> int:
        return self.X1.shape[0]

    @classmethod
    def model(cls, n: int) -> Self:
        """The symmetric pair (I_n, -I_n)"""
        return cls(np.eye(n), -np.eye(n))

    def to_json(self) -> Dict[str, Any]:
        return {"X1": matrix_to_json(self.X1), "X2": matrix_to_json(self.X2)}

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> Self:
        if not isinstance(data, dict):
            raise MatrixValidationError("wells: expected an object with 'X1' and 'X2'")
        for key in ("X1", "X2"):
            if key not in data:
                raise MatrixValidationError(f"{key}: missing")
        return cls(matrix_from_json(data["X1"], "X1"), matrix_from_json(data["X2"], "X2"))


@dataclass(frozen=True)
class RankOneDirection:
    """Direction u v^T for rank-one convexity tests"""
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if u.ndim != 1 or v.ndim != 1 or u.shape != v.shape:
            raise DimensionMismatchError(f"u and v must be vectors of equal length, got {u.shape}, {v.shape}")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise MatrixValidationError("u and v must be finite")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        return self.u.shape[0]

    @property
    def is_nonzero(self) -> bool:
        return bool(np.any(self.u) and np.any(self.v))

    def outer(self) -> np.ndarray:
        return np.outer(self.u, self.v)

    def to_json(self) -> Dict[str, Any]:
        return {"u": self.u.tolist(), "v": self.v.tolist()}


def _check_dim(dw: DoubleWell, X, name: str = "X") -> np.ndarray:
    X = as_matrix(X, name, stacked=True)
    if X.shape[-1] != dw.n:
        raise DimensionMismatchError(f"{name} is {X.shape[-1]}x{X.shape[-1]} but the wells are {dw.n}x{dw.n}")
    return X


def evaluate(dw: DoubleWell, X):
    """f(X) = |X - X1|^2 |X - X2|^2, product form"""
    X = _check_dim(dw, X)
    return frobenius_norm_sq(X - dw.X1) * frobenius_norm_sq(X - dw.X2)


def evaluate_g(dw: DoubleWell, Z):
    """
    Translated energy g(Z) = f(Z + B) through its quartic expansion
    |Z|^4 + 2|A|^2|Z|^2 + |A|^4 - 4 <Z, A>^2.
    """
    Z = _check_dim(dw, Z, "Z")
    z2 = frobenius_norm_sq(Z)
    a2 = frobenius_norm_sq(dw.A)
    za = frobenius_inner(Z, dw.A)
    return z2 * z2 + 2.0 * a2 * z2 + a2 * a2 - 4.0 * za * za


def gradient(dw: DoubleWell, X) -> np.ndarray:
    """grad f(X) = 2|X - X2|^2 (X - X1) + 2|X - X1|^2 (X - X2)"""
    X = _check_dim(dw, X)
    D1 = X - dw.X1
    D2 = X - dw.X2
    n1 = np.asarray(frobenius_norm_sq(D1))[..., None, None]
    n2 = np.asarray(frobenius_norm_sq(D2))[..., None, None]
    return 2.0 * n2 * D1 + 2.0 * n1 * D2


def hessian_rank_one(dw: DoubleWell, Z, d: RankOneDirection) -> float:
    """
    Second derivative of t -> g(Z + t u v^T) at t = 0:
    8 <Z, u v^T>^2 + 4 (|Z|^2 + |A|^2) |u|^2 |v|^2 - 8 (u^T A v)^2.
    """
    Z = _check_dim(dw, Z, "Z")
    if d.n != dw.n:
        raise DimensionMismatchError(f"direction has length {d.n} but the wells are {dw.n}x{dw.n}")
    zw = float(d.u @ Z @ d.v)
    uav = float(d.u @ dw.A @ d.v)
    uv2 = float(d.u @ d.u) * float(d.v @ d.v)
    return 8.0 * zw * zw + 4.0 * (frobenius_norm_sq(Z) + frobenius_norm_sq(dw.A)) * uv2 - 8.0 * uav * uav


def evaluate_h(Y, a: float):
    """Normalized energy h(Y) = |Y - aI|^2 |Y + aI|^2"""
    Y = as_matrix(Y, "Y", stacked=True)
    I = np.eye(Y.shape[-1])
    return frobenius_norm_sq(Y - a * I) * frobenius_norm_sq(Y + a * I)


def _require_dim(X, n: int):
    X = as_matrix(X, stacked=True)
    if X.shape[-1] != n:
        raise DimensionMismatchError(f"expected a {n}x{n} matrix, got {X.shape[-1]}x{X.shape[-1]}")
    return X


def g2_frame(X):
    """Frame-invariant 2x2 energy f(X) - 4(X21 - X12)^2 = |X|^4 + 4 - 8 det X for wells (I, -I)"""
    X = _require_dim(X, 2)
    skew_gap = X[..., 1, 0] - X[..., 0, 1]
    return evaluate(DoubleWell.model(2), X) - 4.0 * skew_gap * skew_gap


def p3_shifted(X):
    """f(X) + 4 (tr X)^2 - 9 for wells (I3, -I3); equals |X|^2 (|X|^2 + 6)"""
    X = _require_dim(X, 3)
    tr = trace(X)
    return evaluate(DoubleWell.model(3), X) + 4.0 * tr * tr - 9.0


def p3_nonpoly(X):
    """f(X) + 4 (tr X)^2 - 12 |X|^2 for wells (I3, -I3); equals (|X|^2 - 3)^2"""
    X = _require_dim(X, 3)
    tr = trace(X)
    return evaluate(DoubleWell.model(3), X) + 4.0 * tr * tr - 12.0 * frobenius_norm_sq(X)


def closed_form_2x2(X):
    """|X|^4 + 4(X21 - X12)^2 - 8 det X + 4"""
    X = _require_dim(X, 2)
    x2 = frobenius_norm_sq(X)
    skew_gap = X[..., 1, 0] - X[..., 0, 1]
    return x2 * x2 + 4.0 * skew_gap * skew_gap - 8.0 * s2(X) + 4.0


def sos_2x2(X):
    """(|X|^2 - 2)^2 + 4(X11 - X22)^2 + 4(X21 - X12)^2"""
    X = _require_dim(X, 2)
    x2 = frobenius_norm_sq(X)
    diag_gap = X[..., 0, 0] - X[..., 1, 1]
    skew_gap = X[..., 1, 0] - X[..., 0, 1]
    return (x2 - 2.0) ** 2 + 4.0 * diag_gap * diag_gap + 4.0 * skew_gap * skew_gap


def closed_form_3x3(X):
    """
    |X|^4 + 2|X|^2 + 8|X_a|^2 - 8 s2(X) + 9, using |X|^2 - tr X^2 = 2|X_a|^2.

    The quadratic term carries the skew part: with the symmetric part the
    right-hand side would be 24 at X = I3, where f vanishes.
    """
    X = _require_dim(X, 3)
    x2 = frobenius_norm_sq(X)
    return x2 * x2 + 2.0 * x2 + 8.0 * frobenius_norm_sq(skew_part(X)) - 8.0 * s2(X) + 9.0
