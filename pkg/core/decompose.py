"""
Split f = f_C + f_L for certified wells, in coordinates Y = Q^T (X - B):

    f_C(X) = |Y|^4 + 2a^2 (n-2) |Y|^2 + 8a^2 |Y_a|^2 + n^2 a^4   (convex)
    f_L(X) = -8a^2 s2(Y)                                          (null Lagrangian)
"""
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
from typing_extensions import Self

from core.certify import Certificate, CertifyOptions, certify
from core.energy import DoubleWell
from core.matrix import as_matrix, frobenius_inner, frobenius_norm_sq, matrix_from_json, matrix_to_json, s2, skew_part
from utils.errors import DimensionMismatchError, MatrixValidationError, NotPolyconvexError

ORTHONORMAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Decomposition:
    n: int
    a: float
    Q: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        Q = as_matrix(self.Q, "Q")
        B = as_matrix(self.B, "B")
        if Q.shape != (self.n, self.n) or B.shape != (self.n, self.n):
            raise DimensionMismatchError(f"Q {Q.shape} and B {B.shape} must both be {self.n}x{self.n}")
        if np.max(np.abs(Q.T @ Q - np.eye(self.n))) > ORTHONORMAL_TOL:
            raise MatrixValidationError("Q is not orthonormal")
        if self.a < 0:
            raise MatrixValidationError(f"a must be non-negative, got {self.a}")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "B", B)

    @property
    def null_coeff(self) -> float:
        return -8.0 * self.a * self.a

    def to_json(self) -> Dict[str, Any]:
        return {
            "verdict": "polyconvex",
            "n": self.n,
            "a": self.a,
            "Q": matrix_to_json(self.Q),
            "B": matrix_to_json(self.B),
            "null_coeff": self.null_coeff,
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> Self:
        Q = matrix_from_json(data["Q"], "Q")
        return cls(n=Q.shape[0], a=float(data["a"]), Q=Q, B=matrix_from_json(data["B"], "B"))


def build(cert: Certificate) -> Decomposition:
    """Decomposition from a Polyconvex certificate"""
    if not cert.is_polyconvex:
        raise NotPolyconvexError("decomposition is undefined for a non-polyconvex energy", certificate=cert)
    return Decomposition(n=cert.n, a=cert.a, Q=cert.Q, B=cert.B)


def from_wells(dw: DoubleWell, opts: Optional[CertifyOptions] = None) -> Decomposition:
    return build(certify(dw, opts))


def _to_local(dec: Decomposition, X) -> np.ndarray:
    X = as_matrix(X, stacked=True)
    if X.shape[-1] != dec.n:
        raise DimensionMismatchError(f"X is {X.shape[-1]}x{X.shape[-1]} but the decomposition is {dec.n}x{dec.n}")
    return dec.Q.T @ (X - dec.B)


def eval_convex(dec: Decomposition, X):
    Y = _to_local(dec, X)
    a2 = dec.a * dec.a
    y2 = frobenius_norm_sq(Y)
    return y2 * y2 + 2.0 * a2 * (dec.n - 2) * y2 + 8.0 * a2 * frobenius_norm_sq(skew_part(Y)) + dec.n ** 2 * a2 * a2


def eval_null(dec: Decomposition, X):
    return dec.null_coeff * s2(_to_local(dec, X))


def convex_gradient(dec: Decomposition, X) -> np.ndarray:
    """Q (4|Y|^2 Y + 4a^2 (n-2) Y + 16a^2 Y_a); d|Y_a|^2/dY = 2 Y_a"""
    Y = _to_local(dec, X)
    a2 = dec.a * dec.a
    y2 = np.asarray(frobenius_norm_sq(Y))[..., None, None]
    grad_local = 4.0 * y2 * Y + 4.0 * a2 * (dec.n - 2) * Y + 16.0 * a2 * skew_part(Y)
    return dec.Q @ grad_local


def convex_increment(dec: Decomposition, X, D):
    """
    f_C(X + D) - f_C(X) expanded in D so that no O(f_C) terms cancel.

    Accurate to roundoff relative to the increment itself, which the solver
    needs once energy decreases drop below eps * I_C.
    """
    Y = _to_local(dec, X)
    D = as_matrix(D, "D", stacked=True)
    E = dec.Q.T @ D
    a2 = dec.a * dec.a
    y2 = frobenius_norm_sq(Y)
    dy2 = 2.0 * frobenius_inner(Y, E) + frobenius_norm_sq(E)
    Ya = skew_part(Y)
    Ea = skew_part(E)
    dskew = 2.0 * frobenius_inner(Ya, Ea) + frobenius_norm_sq(Ea)
    return dy2 * (2.0 * y2 + dy2) + 2.0 * a2 * (dec.n - 2) * dy2 + 8.0 * a2 * dskew
