"""Discrete Dirichlet problem for certified double wells, solved through I_C."""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from typing_extensions import Self

from core.certify import Certificate, CertifyOptions, certify
from core.decompose import Decomposition, build, convex_gradient, convex_increment, eval_convex, eval_null
from core.energy import DoubleWell, evaluate
from core.matrix import derive_rng
from fem.mesh import FieldLike, Mesh2, VectorField, field_values, gradients, integrate
from utils.errors import ConfigError, DimensionMismatchError, NotPolyconvexError

# Stream index of the uniqueness probe's random starts under derive_rng.
PROBE_STREAM = 2

HistoryEntry = Tuple[int, float, float, float]


@dataclass(frozen=True)
class SolveOptions:
    grad_tol: float = 1e-9
    max_iters: int = 100000
    armijo_c: float = 1e-4
    backtrack_ratio: float = 0.5
    initial_step: float = 1.0
    min_step: float = 1e-30

    def __post_init__(self):
        for name in ("grad_tol", "max_iters", "armijo_c", "backtrack_ratio", "initial_step", "min_step"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"solver option {name} must be positive, got {getattr(self, name)}")
        if not self.armijo_c < 1:
            raise ConfigError(f"armijo_c must be below 1, got {self.armijo_c}")
        if not self.backtrack_ratio < 1:
            raise ConfigError(f"backtrack_ratio must be below 1, got {self.backtrack_ratio}")

    @classmethod
    def from_config(cls, config: Dict[str, Any], **overrides) -> Self:
        solver = config.get("solver", {})
        values = {
            "grad_tol": float(solver.get("grad_tol", cls.grad_tol)),
            "max_iters": int(solver.get("max_iters", cls.max_iters)),
            "armijo_c": float(solver.get("armijo_c", cls.armijo_c)),
            "backtrack_ratio": float(solver.get("backtrack_ratio", cls.backtrack_ratio)),
            "initial_step": float(solver.get("initial_step", cls.initial_step)),
            "min_step": float(solver.get("min_step", cls.min_step)),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass(frozen=True)
class EnergyReport:
    I: float
    I_C: float
    I_L: float

    def to_json(self) -> Dict[str, Any]:
        return {"I": self.I, "I_C": self.I_C, "I_L": self.I_L}


@dataclass(frozen=True, eq=False)
class SolveResult:
    """
    Minimizer and its energies.

    ``history`` holds (iteration, I_C, grad_norm, step) for every accepted
    step; its I_C column accumulates the exact increments used by the line
    search, so it is non-increasing by construction.
    """
    y_star: VectorField
    energy_total: float
    energy_convex: float
    energy_null: float
    iterations: int
    final_grad_norm: float
    converged: bool
    grad_tol: float
    history: List[HistoryEntry] = field(default_factory=list, repr=False)

    def to_json(self, field_csv: Optional[str] = None) -> Dict[str, Any]:
        return {
            "energy_total": self.energy_total,
            "energy_convex": self.energy_convex,
            "energy_null": self.energy_null,
            "iterations": self.iterations,
            "final_grad_norm": self.final_grad_norm,
            "converged": self.converged,
            "grad_tol": self.grad_tol,
            "field_csv": field_csv,
        }


class DirichletSolver:
    """
    Gradient descent with Armijo backtracking on I_C over interior nodes.

    Boundary nodes are pinned to the data y0; their rows are dropped from
    the gradient rather than penalized. Construction certifies the wells and
    refuses non-polyconvex ones.
    """

    def __init__(
        self,
        dw: DoubleWell,
        mesh: Mesh2,
        options: Optional[SolveOptions] = None,
        certify_options: Optional[CertifyOptions] = None,
    ):
        self.logger = logger
        if dw.n != 2:
            raise DimensionMismatchError(f"the Dirichlet solver is two-dimensional, got {dw.n}x{dw.n} wells")
        self.dw = dw
        self.mesh = mesh
        self.options = options or SolveOptions()
        self.certificate: Certificate = certify(dw, certify_options)
        if not self.certificate.is_polyconvex:
            self.logger.error("Refusing to solve: the energy is not polyconvex")
            raise NotPolyconvexError("wells are not polyconvex; I_C reformulation unavailable", certificate=self.certificate)
        self.decomposition: Decomposition = build(self.certificate)

    def convex_energy(self, y: FieldLike) -> float:
        return integrate(self.mesh, y, lambda G: eval_convex(self.decomposition, G), batched=True)

    def null_energy(self, y: FieldLike) -> float:
        return integrate(self.mesh, y, lambda G: eval_null(self.decomposition, G), batched=True)

    def total_energy(self, y: FieldLike) -> float:
        return integrate(self.mesh, y, lambda G: evaluate(self.dw, G), batched=True)

    def report(self, y: FieldLike) -> EnergyReport:
        return EnergyReport(I=self.total_energy(y), I_C=self.convex_energy(y), I_L=self.null_energy(y))

    def nodal_gradient(self, values: np.ndarray) -> np.ndarray:
        """Derivative of I_C with respect to every nodal value, shape (N, 2)"""
        P = convex_gradient(self.decomposition, gradients(self.mesh, values))
        local = self.mesh.areas[:, None, None] * np.einsum("tab,tkb->tka", P, self.mesh.shape_gradients)
        grad = np.zeros_like(values)
        np.add.at(grad, self.mesh.triangles, local)
        return grad

    def convex_increment(self, values: np.ndarray, displacement: np.ndarray) -> float:
        """I_C(values + displacement) - I_C(values) without cancellation"""
        G = gradients(self.mesh, values)
        dG = gradients(self.mesh, displacement)
        return float(np.sum(self.mesh.areas * convex_increment(self.decomposition, G, dG)))

    def solve(self, y0: FieldLike, initial: Optional[FieldLike] = None) -> SolveResult:
        """
        Minimize I_C with boundary values from y0.

        Interior values of ``initial`` (default: y0) seed the iteration.
        Hitting max_iters, or a step below min_step, returns the current
        iterate with converged=False.
        """
        opts = self.options
        mesh = self.mesh
        boundary = mesh.boundary_nodes
        interior = mesh.interior_nodes

        values = field_values(mesh, y0).copy()
        if initial is not None:
            values[interior] = field_values(mesh, initial)[interior]

        tol = opts.grad_tol * (1 + interior.size)
        energy = self.convex_energy(values)
        grad = self.nodal_gradient(values)
        grad[boundary] = 0.0
        grad_norm = float(np.max(np.abs(grad))) if interior.size else 0.0
        history: List[HistoryEntry] = [(0, energy, grad_norm, 0.0)]

        step = opts.initial_step
        iterations = 0
        stalled = False
        while grad_norm > tol and iterations < opts.max_iters:
            direction = -grad
            slope = -float(np.sum(grad * grad))
            while True:
                delta = self.convex_increment(values, step * direction)
                if delta <= opts.armijo_c * step * slope:
                    break
                step *= opts.backtrack_ratio
                if step < opts.min_step:
                    stalled = True
                    break
            if stalled:
                self.logger.warning(f"Line search stalled at iteration {iterations} (grad norm {grad_norm:.3e})")
                break

            values = values + step * direction
            energy = energy + delta
            grad = self.nodal_gradient(values)
            grad[boundary] = 0.0
            grad_norm = float(np.max(np.abs(grad)))
            iterations += 1
            history.append((iterations, energy, grad_norm, step))
            if iterations % 1000 == 0:
                self.logger.debug(f"iter {iterations}: I_C={energy:.12g} grad={grad_norm:.3e} step={step:.3e}")
            step = min(step / opts.backtrack_ratio, opts.initial_step)

        converged = grad_norm <= tol
        if converged:
            self.logger.info(f"Converged in {iterations} iterations (grad norm {grad_norm:.3e} <= {tol:.3e})")
        else:
            self.logger.warning(f"No convergence after {iterations} iterations (grad norm {grad_norm:.3e} > {tol:.3e})")

        y_star = VectorField(values)
        energy_convex = self.convex_energy(values)
        energy_null = self.null_energy(values)
        return SolveResult(
            y_star=y_star,
            energy_total=energy_convex + energy_null,
            energy_convex=energy_convex,
            energy_null=energy_null,
            iterations=iterations,
            final_grad_norm=grad_norm,
            converged=converged,
            grad_tol=opts.grad_tol,
            history=history,
        )


def minimize_dirichlet(
    dw: DoubleWell,
    mesh: Mesh2,
    y0: FieldLike,
    opts: Optional[SolveOptions] = None,
    initial: Optional[FieldLike] = None,
    certify_options: Optional[CertifyOptions] = None,
) -> SolveResult:
    return DirichletSolver(dw, mesh, opts, certify_options).solve(y0, initial)


@dataclass(frozen=True, eq=False)
class ProbeReport:
    max_pairwise_dist: float
    energy_spread: float
    results: List[SolveResult]
    seeds: List[int]

    def to_json(self) -> Dict[str, Any]:
        return {
            "max_pairwise_dist": self.max_pairwise_dist,
            "energy_spread": self.energy_spread,
            "seeds": self.seeds,
            "results": [r.to_json() for r in self.results],
        }


def uniqueness_probe(
    dw: DoubleWell,
    mesh: Mesh2,
    y0: FieldLike,
    opts: Optional[SolveOptions] = None,
    starts: int = 5,
    seed: int = 0,
    seeds: Optional[Sequence[int]] = None,
    perturbation: float = 0.1,
    certify_options: Optional[CertifyOptions] = None,
) -> ProbeReport:
    """
    Solve from several random interior starts and compare the minimizers.

    Start k perturbs y0's interior values by Gaussian noise of scale
    ``perturbation`` drawn from derive_rng(seeds[k], PROBE_STREAM); by
    default seeds[k] = seed + k. Equal seeds give identical solves.
    """
    seeds = [seed + k for k in range(starts)] if seeds is None else [int(s) for s in seeds]
    if len(seeds) < 2:
        raise ValueError(f"uniqueness probe needs at least 2 starts, got {len(seeds)}")

    solver = DirichletSolver(dw, mesh, opts, certify_options)
    base = field_values(mesh, y0)
    interior = mesh.interior_nodes
    results = []
    for k, start_seed in enumerate(seeds):
        rng = derive_rng(start_seed, PROBE_STREAM)
        initial = base.copy()
        initial[interior] += perturbation * rng.standard_normal((interior.size, 2))
        logger.info(f"Uniqueness probe start {k + 1}/{len(seeds)} (seed {start_seed})")
        results.append(solver.solve(base, initial))

    max_dist = 0.0
    for i in range(len(results)):
        for j in range(i + 1, len(results)):
            dist = float(np.max(np.abs(results[i].y_star.values - results[j].y_star.values)))
            max_dist = max(max_dist, dist)
    energies = np.array([r.energy_total for r in results])
    spread = float((energies.max() - energies.min()) / (1.0 + abs(energies.mean())))
    logger.info(f"Uniqueness probe: max pairwise distance {max_dist:.3e}, relative energy spread {spread:.3e}")
    return ProbeReport(max_pairwise_dist=max_dist, energy_spread=spread, results=results, seeds=seeds)


def energy_report(
    dw: DoubleWell,
    mesh: Mesh2,
    y: FieldLike,
    certify_options: Optional[CertifyOptions] = None,
) -> EnergyReport:
    """I, I_C and I_L of a field; I is integrated directly from f"""
    return DirichletSolver(dw, mesh, certify_options=certify_options).report(y)
