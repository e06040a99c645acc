"""minimize and probe-uniqueness subcommands."""
import json
from typing import Optional

import numpy as np

from commands.base_command import EXIT_NO_CONVERGENCE, EXIT_NOT_POLYCONVEX, EXIT_OK, BaseCommand
from core.energy import DoubleWell
from fem.mesh import Mesh2, VectorField, unit_square_mesh
from fem.minimize import DirichletSolver, SolveOptions, uniqueness_probe
from utils.errors import DimensionMismatchError, InputError, MeshValidationError, NotPolyconvexError
from utils.result_storage import field_csv_path, read_field_csv


class _DirichletCommand(BaseCommand):
    @property
    def mesh_m(self) -> int:
        m = getattr(self.args, "mesh_m", None)
        return int(self.config.get("fem", {}).get("mesh_m", 8) if m is None else m)

    def mesh(self) -> Mesh2:
        m = self.mesh_m
        try:
            return unit_square_mesh(m)
        except MeshValidationError as e:
            raise InputError(f"--mesh-m: {e}") from e

    def solve_options(self) -> SolveOptions:
        return SolveOptions.from_config(
            self.config,
            grad_tol=getattr(self.args, "grad_tol", None),
            max_iters=getattr(self.args, "max_iters", None),
        )

    def boundary(self, mesh: Mesh2) -> VectorField:
        """Boundary data from --boundary-affine or --boundary-csv"""
        affine = getattr(self.args, "boundary_affine", None)
        csv_path = getattr(self.args, "boundary_csv", None)
        if (affine is None) == (csv_path is None):
            raise InputError("exactly one of --boundary-affine and --boundary-csv is required")
        if csv_path is not None:
            return VectorField(read_field_csv(csv_path, mesh.num_nodes))
        return VectorField.from_affine(mesh, *parse_affine(affine))

    def check_wells(self, dw: DoubleWell):
        if dw.n != 2:
            raise InputError(f"wells: the Dirichlet solver needs 2x2 wells, got {dw.n}x{dw.n}")

    def refuse(self, e: NotPolyconvexError) -> int:
        self.logger.error(str(e))
        self.write_output(e.certificate.to_json())
        return EXIT_NOT_POLYCONVEX


def parse_affine(text: str):
    """
    Parse --boundary-affine: a 2x2 list ``[[..],[..]]``, a matrix object
    ``{"n": 2, "entries": ...}`` or ``{"M": ..., "c": [c1, c2]}``.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"--boundary-affine is not valid JSON: {e}") from e

    c = None
    if isinstance(data, dict) and "M" in data:
        c = data.get("c")
        data = data["M"]
    if isinstance(data, dict):
        data = data.get("entries")
    try:
        M = np.asarray(data, dtype=float)
        c = np.zeros(2) if c is None else np.asarray(c, dtype=float)
    except (TypeError, ValueError) as e:
        raise InputError(f"--boundary-affine: M and c must be numeric ({e})") from e
    if M.shape != (2, 2) or not np.all(np.isfinite(M)):
        raise InputError(f"--boundary-affine: M must be a finite 2x2 matrix, got shape {M.shape}")
    if c.shape != (2,) or not np.all(np.isfinite(c)):
        raise InputError(f"--boundary-affine: c must be a finite 2-vector, got shape {c.shape}")
    return M, c


class MinimizeCommand(_DirichletCommand):
    name = "minimize"

    def run(self) -> int:
        dw = self.load_wells()
        self.check_wells(dw)
        mesh = self.mesh()
        y0 = self.boundary(mesh)
        try:
            solver = DirichletSolver(dw, mesh, self.solve_options(), self.certify_options())
        except NotPolyconvexError as e:
            return self.refuse(e)
        except DimensionMismatchError as e:
            raise InputError(str(e)) from e

        result = solver.solve(y0)
        out = self.output_path()
        csv_path = field_csv_path(out)
        self.storage.store_field_csv(csv_path, mesh.nodes, result.y_star.values)
        history: Optional[str] = getattr(self.args, "history", None)
        if history:
            self.storage.store_history_csv(history, result.history)

        payload = result.to_json(field_csv=csv_path)
        payload["a"] = solver.certificate.a
        payload["mesh_m"] = self.mesh_m
        self.storage.store_result(self.name, payload, path=out)
        return EXIT_OK if result.converged else EXIT_NO_CONVERGENCE

    def output_path(self) -> str:
        # The CSV name derives from the JSON path, so the default JSON path is fixed up front.
        return getattr(self.args, "out", None) or self.storage.default_path(self.name)


class ProbeUniquenessCommand(_DirichletCommand):
    name = "probe-uniqueness"

    def run(self) -> int:
        dw = self.load_wells()
        self.check_wells(dw)
        mesh = self.mesh()
        y0 = self.boundary(mesh)
        starts = getattr(self.args, "starts", None)
        starts = 5 if starts is None else int(starts)
        if starts < 2:
            raise InputError(f"--starts must be at least 2, got {starts}")
        perturbation = float(self.config.get("solver", {}).get("probe_perturbation", 0.1))
        try:
            report = uniqueness_probe(dw, mesh, y0, self.solve_options(), starts=starts, seed=self.seed,
                                      perturbation=perturbation, certify_options=self.certify_options())
        except NotPolyconvexError as e:
            return self.refuse(e)

        all_converged = all(r.converged for r in report.results)
        payload = report.to_json()
        payload["all_converged"] = all_converged
        self.write_output(payload)
        return EXIT_OK if all_converged else EXIT_NO_CONVERGENCE
