"""Polyconvexity certificate for the double well: equal singular values of X1 - X2."""
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np
from loguru import logger
from typing_extensions import Self

from core.energy import DoubleWell, RankOneDirection, evaluate_g, hessian_rank_one
from core.matrix import derive_rng, frobenius_norm_sq, matrix_from_json, matrix_to_json, svd
from core.oracles import SECOND_STEP, FiniteDifferenceSteps, fd_second_derivative
from utils.errors import ConfigError, NoViolationExistsError

# Stream index of the rank-one sampler under derive_rng.
SAMPLING_STREAM = 1

WITNESS_AT_ZERO = "at-zero"
WITNESS_NONE_AT_ZERO = "none-at-zero"


class Verdict(str, Enum):
    POLYCONVEX = "polyconvex"
    NOT_POLYCONVEX = "not_polyconvex"


@dataclass(frozen=True)
class CertifyOptions:
    tol: float = 1e-8
    oracle_step: float = SECOND_STEP

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigError(f"certify tol must be positive, got {self.tol}")
        if not self.oracle_step > 0:
            raise ConfigError(f"witness oracle step must be positive, got {self.oracle_step}")

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> Self:
        return cls(
            tol=float(config.get("certify", {}).get("tol", cls.tol)),
            oracle_step=FiniteDifferenceSteps.from_config(config).second,
        )


@dataclass(frozen=True, eq=False)
class Certificate:
    """
    Outcome of the polyconvexity test.

    Polyconvex verdicts carry (a, Q, B) with A = a Q. NotPolyconvex verdicts
    carry the rank-one witness at Z = 0 when one exists; otherwise
    ``witness_status`` is "none-at-zero" and the witness fields are None.
    """
    verdict: Verdict
    sigma: np.ndarray
    B: np.ndarray
    sigma_spread: float
    a: Optional[float] = None
    Q: Optional[np.ndarray] = None
    witness: Optional[RankOneDirection] = None
    violation_value: Optional[float] = None
    oracle_value: Optional[float] = None
    witness_status: Optional[str] = None

    @property
    def is_polyconvex(self) -> bool:
        return self.verdict is Verdict.POLYCONVEX

    @property
    def n(self) -> int:
        return self.B.shape[0]

    def to_json(self) -> Dict[str, Any]:
        if self.is_polyconvex:
            return {
                "verdict": self.verdict.value,
                "a": self.a,
                "Q": matrix_to_json(self.Q),
                "B": matrix_to_json(self.B),
                "sigma_spread": self.sigma_spread,
                "sigma": self.sigma.tolist(),
            }
        return {
            "verdict": self.verdict.value,
            "u": None if self.witness is None else self.witness.u.tolist(),
            "v": None if self.witness is None else self.witness.v.tolist(),
            "value": self.violation_value,
            "oracle_value": self.oracle_value,
            "witness": self.witness_status,
            "sigma": self.sigma.tolist(),
            "sigma_spread": self.sigma_spread,
            "B": matrix_to_json(self.B),
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> Self:
        verdict = Verdict(data["verdict"])
        sigma = np.asarray(data["sigma"], dtype=float)
        B = matrix_from_json(data["B"], "B")
        if verdict is Verdict.POLYCONVEX:
            return cls(
                verdict=verdict,
                sigma=sigma,
                B=B,
                sigma_spread=float(data["sigma_spread"]),
                a=float(data["a"]),
                Q=matrix_from_json(data["Q"], "Q"),
            )
        witness = None
        if data.get("u") is not None:
            witness = RankOneDirection(np.asarray(data["u"]), np.asarray(data["v"]))
        return cls(
            verdict=verdict,
            sigma=sigma,
            B=B,
            sigma_spread=float(data["sigma_spread"]),
            witness=witness,
            violation_value=data.get("value"),
            oracle_value=data.get("oracle_value"),
            witness_status=data.get("witness"),
        )


def find_violation(dw: DoubleWell) -> Tuple[RankOneDirection, float]:
    """
    Rank-one direction at Z = 0 along which g has negative curvature.

    Uses the leading singular pair of A: u = U e1, v = V e1, so that the
    curvature is 4|A|^2 - 8 sigma_1^2.

    Raises:
        NoViolationExistsError: if sigma_1^2 <= |A|^2 / 2
    """
    result = svd(dw.A)
    sigma = result.sigma
    # Compared on sigma / sigma_1 so the squares cannot overflow or underflow.
    ratios = sigma / sigma[0] if sigma[0] > 0 else sigma
    if sigma[0] == 0 or not 0.5 * float(np.sum(ratios * ratios)) < 1.0:
        raise NoViolationExistsError(
            f"sigma_1^2 does not exceed half of sum sigma_k^2 (sigma / sigma_1 = {np.round(ratios, 12).tolist()})",
            sigma=sigma,
        )
    witness = RankOneDirection(result.U[:, 0].copy(), result.V[:, 0].copy())
    value = hessian_rank_one(dw, np.zeros((dw.n, dw.n)), witness)
    return witness, value


def certify(dw: DoubleWell, opts: Optional[CertifyOptions] = None) -> Certificate:
    """Decide polyconvexity from the singular values of A = (X1 - X2)/2"""
    opts = opts or CertifyOptions()
    n = dw.n

    if not np.any(dw.A):
        logger.info("Coincident wells: f = |X - X1|^4 is convex, certified with a = 0")
        return Certificate(
            verdict=Verdict.POLYCONVEX,
            sigma=np.zeros(n),
            B=dw.B.copy(),
            sigma_spread=0.0,
            a=0.0,
            Q=np.eye(n),
        )

    result = svd(dw.A)
    sigma = result.sigma
    spread = float(sigma[0] - sigma[-1])

    if spread <= opts.tol * (1.0 + sigma[0]):
        a = float(np.mean(sigma))
        logger.info(f"Polyconvex: singular values coincide (a={a:.6g}, spread={spread:.3g})")
        return Certificate(
            verdict=Verdict.POLYCONVEX,
            sigma=sigma,
            B=dw.B.copy(),
            sigma_spread=spread,
            a=a,
            Q=result.U @ result.V.T,
        )

    try:
        witness, value = find_violation(dw)
    except NoViolationExistsError as e:
        logger.warning(f"Not polyconvex, but no rank-one violation at Z=0: {str(e)}")
        return Certificate(
            verdict=Verdict.NOT_POLYCONVEX,
            sigma=sigma,
            B=dw.B.copy(),
            sigma_spread=spread,
            witness_status=WITNESS_NONE_AT_ZERO,
        )

    oracle = fd_second_derivative(lambda Z: evaluate_g(dw, Z), np.zeros((n, n)), witness.outer(), opts.oracle_step)
    logger.info(f"Not polyconvex: sigma={np.round(sigma, 12).tolist()}, witness curvature {value:.6g} (oracle {oracle:.6g})")
    return Certificate(
        verdict=Verdict.NOT_POLYCONVEX,
        sigma=sigma,
        B=dw.B.copy(),
        sigma_spread=spread,
        witness=witness,
        violation_value=value,
        oracle_value=oracle,
        witness_status=WITNESS_AT_ZERO,
    )


@dataclass(frozen=True, eq=False)
class RankOneReport:
    """Smallest rank-one curvature found by sample_rank_one and where"""
    min_value: float
    Z: np.ndarray
    u: np.ndarray
    v: np.ndarray
    index: int
    samples: int
    candidates: int
    max_z_norm: float

    def to_json(self) -> Dict[str, Any]:
        return {
            "min_value": self.min_value,
            "index": self.index,
            "samples": self.samples,
            "candidates": self.candidates,
            "max_z_norm": self.max_z_norm,
            "Z": matrix_to_json(self.Z),
            "u": self.u.tolist(),
            "v": self.v.tolist(),
        }


def _hessian_rank_one_batch(dw: DoubleWell, Z: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    zw = np.einsum("ki,kij,kj->k", u, Z, v)
    uav = np.einsum("ki,ij,kj->k", u, dw.A, v)
    uv2 = np.sum(u * u, axis=1) * np.sum(v * v, axis=1)
    z2 = np.sum(Z * Z, axis=(1, 2))
    return 8.0 * zw * zw + 4.0 * (z2 + frobenius_norm_sq(dw.A)) * uv2 - 8.0 * uav * uav


def sample_rank_one(dw: DoubleWell, samples: int, seed: int, z_radius: float = 10.0) -> RankOneReport:
    """
    Search for negative rank-one curvature of g.

    Evaluates the analytic second derivative at the n singular-pair
    directions at Z = 0, then at ``samples`` seeded random (Z, u, v) with
    unit u, v and |Z| <= z_radius. The minimum wins; ties keep the lowest
    index, so the report depends only on (dw, samples, seed, z_radius).
    """
    if samples < 1:
        raise ValueError(f"samples must be at least 1, got {samples}")
    n = dw.n
    rng = derive_rng(seed, SAMPLING_STREAM)

    Z = rng.standard_normal((samples, n, n))
    norms = np.linalg.norm(Z, axis=(1, 2))
    radii = z_radius * rng.uniform(size=samples)
    Z *= (radii / np.where(norms == 0.0, 1.0, norms))[:, None, None]
    u = rng.standard_normal((samples, n))
    v = rng.standard_normal((samples, n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    v /= np.linalg.norm(v, axis=1, keepdims=True)

    pairs = svd(dw.A)
    Z_all = np.concatenate([np.zeros((n, n, n)), Z])
    u_all = np.concatenate([pairs.U.T, u])
    v_all = np.concatenate([pairs.V.T, v])

    values = _hessian_rank_one_batch(dw, Z_all, u_all, v_all)
    k = int(np.argmin(values))
    report = RankOneReport(
        min_value=float(values[k]),
        Z=Z_all[k].copy(),
        u=u_all[k].copy(),
        v=v_all[k].copy(),
        index=k,
        samples=samples,
        candidates=n,
        max_z_norm=float(np.max(np.linalg.norm(Z_all, axis=(1, 2)))),
    )
    logger.info(f"Rank-one sampling over {samples} + {n} points: min curvature {report.min_value:.6g} at index {k}")
    return report
