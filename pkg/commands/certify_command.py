"""certify, decompose-check and hessian-check subcommands."""
from typing import Any, Dict

import numpy as np

from commands.base_command import EXIT_CHECK_FAILED, EXIT_NOT_POLYCONVEX, EXIT_OK, BaseCommand
from core.certify import certify, sample_rank_one
from core.decompose import build, convex_gradient, eval_convex, eval_null
from core.energy import DoubleWell, RankOneDirection, evaluate, evaluate_g, evaluate_h, hessian_rank_one
from core.matrix import derive_rng, frobenius_norm_sq
from core.oracles import fd_gradient, fd_second_derivative
from utils.errors import InputError

DECOMPOSE_CHECK_STREAM = 4
HESSIAN_CHECK_STREAM = 5

CHECK_KEYS = ("split_residual", "normalized_residual", "midpoint_violation", "gradient_error")


class CertifyCommand(BaseCommand):
    name = "certify"

    def run(self) -> int:
        dw = self.load_wells()
        cert = certify(dw, self.certify_options())
        self.write_output(cert.to_json())
        return EXIT_OK if cert.is_polyconvex else EXIT_NOT_POLYCONVEX


class DecomposeCheckCommand(BaseCommand):
    """Checks f_C + f_L = f, f against its normalized form h, midpoint convexity of f_C and the analytic gradient"""

    name = "decompose-check"

    def run(self) -> int:
        dw = self.load_wells()
        cert = certify(dw, self.certify_options())
        if not cert.is_polyconvex:
            self.logger.error("Cannot decompose: the energy is not polyconvex")
            self.write_output(cert.to_json())
            return EXIT_NOT_POLYCONVEX

        dec = build(cert)
        checks = self.config["checks"]
        samples = getattr(self.args, "samples", None)
        samples = int(checks["decompose_samples"] if samples is None else samples)
        if samples < 1:
            raise InputError(f"--samples must be at least 1, got {samples}")
        steps = self.fd_steps()
        rng = derive_rng(self.seed, DECOMPOSE_CHECK_STREAM)
        n = dw.n

        X = dw.B + rng.standard_normal((samples, n, n))
        Xp = dw.B + rng.standard_normal((samples, n, n))
        f = evaluate(dw, X)
        split = np.abs(eval_convex(dec, X) + eval_null(dec, X) - f) / (1.0 + np.abs(f))
        # f in the frame of the certificate: Y = Q^T (X - B) sends the wells to +-aI.
        normalized = np.abs(evaluate_h(dec.Q.T @ (X - dec.B), dec.a) - f) / (1.0 + np.abs(f))

        fc, fcp = eval_convex(dec, X), eval_convex(dec, Xp)
        mid = eval_convex(dec, 0.5 * (X + Xp))
        midpoint = (mid - 0.5 * fc - 0.5 * fcp) / (1.0 + np.abs(fc) + np.abs(fcp))

        gradient_errors = []
        for k in range(min(samples, int(checks["oracle_points"]))):
            analytic = convex_gradient(dec, X[k])
            numeric = fd_gradient(lambda M: eval_convex(dec, M), X[k], steps.gradient)
            gradient_errors.append(float(np.max(np.abs(analytic - numeric))) / (1.0 + float(np.max(np.abs(analytic)))))

        report = {
            "decomposition": dec.to_json(),
            "samples": samples,
            "split_residual": self._entry(float(np.max(split)), checks["split"]),
            "normalized_residual": self._entry(float(np.max(normalized)), checks["normalized"]),
            "midpoint_violation": self._entry(float(max(np.max(midpoint), 0.0)), checks["midpoint"]),
            "gradient_error": self._entry(max(gradient_errors), checks["gradient_oracle"], len(gradient_errors)),
        }
        passed = all(report[key]["passed"] for key in CHECK_KEYS)
        report["passed"] = passed
        self.logger.info(f"Decomposition check {'passed' if passed else 'FAILED'}")
        self.write_output(report)
        return EXIT_OK if passed else EXIT_CHECK_FAILED

    @staticmethod
    def _entry(value: float, tolerance: float, samples: int = None) -> Dict[str, Any]:
        entry = {"max": value, "tolerance": float(tolerance), "passed": value <= tolerance}
        if samples is not None:
            entry["samples"] = samples
        return entry


class HessianCheckCommand(BaseCommand):
    """Analytic rank-one curvature against finite differences, plus the rank-one sampler"""

    name = "hessian-check"

    def run(self) -> int:
        dw = self.load_wells()
        checks = self.config["checks"]
        sampling = self.config["sampling"]
        cert = certify(dw, self.certify_options())

        oracle_error = self.oracle_error(dw, int(checks["oracle_points"]))

        samples = getattr(self.args, "samples", None)
        samples = int(sampling["samples"] if samples is None else samples)
        if samples < 1:
            raise InputError(f"--samples must be at least 1, got {samples}")
        z_radius = float(sampling["z_radius"])
        sampled = sample_rank_one(dw, samples, self.seed, z_radius)

        a2 = frobenius_norm_sq(dw.A)
        scale = 1.0 + a2 * a2 + sampled.max_z_norm ** 4
        floor = -float(checks["rank_one_floor"]) * scale
        consistent = sampled.min_value >= floor if cert.is_polyconvex else True

        passed = oracle_error <= float(checks["hessian_oracle"]) and consistent
        report = {
            "verdict": cert.verdict.value,
            "oracle_points": int(checks["oracle_points"]),
            "max_oracle_error": oracle_error,
            "tolerance": float(checks["hessian_oracle"]),
            "rank_one": sampled.to_json(),
            "rank_one_floor": floor,
            "rank_one_consistent": consistent,
            "passed": passed,
        }
        if not consistent:
            self.logger.error(f"Certified wells show rank-one curvature {sampled.min_value:.6g} below {floor:.3g}")
        self.write_output(report)
        return EXIT_OK if passed else EXIT_CHECK_FAILED

    def oracle_error(self, dw: DoubleWell, points: int) -> float:
        rng = derive_rng(self.seed, HESSIAN_CHECK_STREAM)
        steps = self.fd_steps()
        n = dw.n
        worst = 0.0
        for _ in range(points):
            Z = rng.standard_normal((n, n))
            d = RankOneDirection(rng.standard_normal(n), rng.standard_normal(n))
            analytic = hessian_rank_one(dw, Z, d)
            numeric = fd_second_derivative(lambda M: evaluate_g(dw, M), Z, d.outer(), steps.second)
            worst = max(worst, abs(analytic - numeric) / (1.0 + abs(analytic)))
        self.logger.info(f"Rank-one Hessian oracle over {points} points: max relative error {worst:.3e}")
        return worst
