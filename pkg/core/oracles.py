"""Central finite-difference oracles used to validate analytic derivatives."""
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional

import numpy as np
from typing_extensions import Self

from core.matrix import as_matrix
from utils.errors import ConfigError

GRADIENT_STEP = 1e-5
SECOND_STEP = 1e-4


@dataclass(frozen=True)
class FiniteDifferenceSteps:
    """Relative step sizes; the actual step is scaled by 1 + |X|"""
    gradient: float = GRADIENT_STEP
    second: float = SECOND_STEP

    def __post_init__(self):
        for key in ("gradient", "second"):
            value = getattr(self, key)
            if not (np.isfinite(value) and value > 0):
                raise ConfigError(f"finite_differences.{key}_step must be positive, got {value}")

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> Self:
        section = config.get("finite_differences", {})
        return cls(
            gradient=float(section.get("gradient_step", GRADIENT_STEP)),
            second=float(section.get("second_step", SECOND_STEP)),
        )


def fd_gradient(func: Callable[[np.ndarray], float], X: np.ndarray, step: Optional[float] = None) -> np.ndarray:
    """Entrywise central differences with h = step * (1 + |X|)"""
    X = as_matrix(X)
    h = (GRADIENT_STEP if step is None else step) * (1.0 + np.linalg.norm(X))
    grad = np.empty_like(X)
    for idx in np.ndindex(X.shape):
        E = np.zeros_like(X)
        E[idx] = h
        grad[idx] = (func(X + E) - func(X - E)) / (2.0 * h)
    return grad


def fd_second_derivative(
    func: Callable[[np.ndarray], float],
    Z: np.ndarray,
    W: np.ndarray,
    step: Optional[float] = None,
) -> float:
    """d^2/dt^2 func(Z + t W) at t=0 by the three-point stencil, h = step * (1 + |Z|)"""
    Z = as_matrix(Z, "Z")
    W = as_matrix(W, "W")
    h = (SECOND_STEP if step is None else step) * (1.0 + np.linalg.norm(Z))
    return float((func(Z + h * W) - 2.0 * func(Z) + func(Z - h * W)) / (h * h))
