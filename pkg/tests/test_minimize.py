import numpy as np
import pytest

from core.certify import CertifyOptions
from core.energy import DoubleWell, evaluate
from fem.mesh import VectorField, null_lagrangian_gap, unit_square_mesh
from fem.minimize import (
    DirichletSolver,
    SolveOptions,
    energy_report,
    minimize_dirichlet,
    uniqueness_probe,
)
from utils.errors import ConfigError, DimensionMismatchError, NotPolyconvexError

pytestmark = pytest.mark.fem


@pytest.fixture(scope="module")
def model():
    return DoubleWell.model(2)


@pytest.fixture(scope="module")
def mesh8():
    return unit_square_mesh(8)


@pytest.fixture(scope="module")
def mesh4():
    return unit_square_mesh(4)


def bent_boundary(mesh):
    """Identity plus a smooth shear; not affine, so the interior must move"""
    return VectorField.from_function(
        mesh, lambda x: np.column_stack([x[:, 0] + 0.1 * np.sin(np.pi * x[:, 1]), x[:, 1]])
    )


def test_identity_boundary_reaches_zero_energy(model, mesh8):
    y0 = VectorField.from_affine(mesh8, np.eye(2))
    result = minimize_dirichlet(model, mesh8, y0)
    assert result.converged
    assert result.energy_total <= 1e-8
    assert np.max(np.abs(result.y_star.values - mesh8.nodes)) <= 1e-6


def test_zero_boundary_energy_is_quasiconvexity_floor(model, mesh8):
    result = minimize_dirichlet(model, mesh8, VectorField.zeros(mesh8))
    assert result.converged
    assert result.energy_total == pytest.approx(4.0, abs=1e-6)
    assert np.max(np.abs(result.y_star.values)) <= 1e-6


@pytest.mark.parametrize("M", [
    np.zeros((2, 2)),
    np.eye(2),
    np.array([[0.5, 1.0], [0.0, 2.0]]),
    np.array([[0.0, -1.0], [1.0, 0.0]]),
], ids=["zero", "identity", "upper_triangular", "quarter_turn"])
def test_affine_boundary_data_is_minimized_by_the_affine_map(model, mesh8, M):
    result = minimize_dirichlet(model, mesh8, VectorField.from_affine(mesh8, M))
    floor = float(evaluate(model, M)) * mesh8.total_area
    assert result.converged
    assert result.energy_total == pytest.approx(floor, rel=1e-6, abs=1e-6)
    assert result.energy_total >= floor - 1e-6 * (1.0 + floor)


def test_bent_boundary_descends_and_keeps_boundary(model, mesh4):
    solver = DirichletSolver(model, mesh4)
    y0 = bent_boundary(mesh4)
    initial = solver.report(y0)
    result = solver.solve(y0)

    assert result.converged, f"stopped at grad norm {result.final_grad_norm:.3e}"
    assert result.energy_total <= initial.I + 1e-12
    b = mesh4.boundary_nodes
    np.testing.assert_array_equal(result.y_star.values[b], y0.values[b])
    assert result.final_grad_norm <= result.grad_tol * (1 + mesh4.interior_nodes.size)

    energies = [entry[1] for entry in result.history]
    assert all(later <= earlier for earlier, later in zip(energies, energies[1:]))
    assert result.history[0][0] == 0
    assert len(result.history) == result.iterations + 1


def test_total_energy_splits_into_convex_and_null_parts(model, mesh4):
    solver = DirichletSolver(model, mesh4)
    result = solver.solve(bent_boundary(mesh4))
    report = solver.report(result.y_star)
    assert report.I == pytest.approx(report.I_C + report.I_L, rel=1e-10)
    assert result.energy_total == pytest.approx(report.I, rel=1e-10)


def test_null_lagrangian_is_fixed_by_boundary_data(model, mesh4):
    solver = DirichletSolver(model, mesh4)
    y0 = bent_boundary(mesh4)
    result = solver.solve(y0)
    assert null_lagrangian_gap(mesh4, result.y_star, y0, solver.decomposition) <= 1e-10


def test_iteration_cap_reports_no_convergence(model, mesh4):
    result = minimize_dirichlet(model, mesh4, bent_boundary(mesh4), SolveOptions(max_iters=1))
    assert not result.converged
    assert result.iterations == 1


def test_nodal_gradient_matches_finite_differences(model, mesh4):
    solver = DirichletSolver(model, mesh4)
    rng = np.random.default_rng(0)
    values = mesh4.nodes + 0.1 * rng.standard_normal(mesh4.nodes.shape)
    grad = solver.nodal_gradient(values)
    h = 1e-6
    for node in mesh4.interior_nodes[:3]:
        for comp in range(2):
            step = np.zeros_like(values)
            step[node, comp] = h
            numeric = (solver.convex_energy(values + step) - solver.convex_energy(values - step)) / (2 * h)
            assert grad[node, comp] == pytest.approx(numeric, rel=1e-5, abs=1e-7)


def test_solver_refuses_non_polyconvex_wells(mesh4):
    dw = DoubleWell(np.diag([2.0, 1.0]), np.zeros((2, 2)))
    with pytest.raises(NotPolyconvexError) as excinfo:
        DirichletSolver(dw, mesh4)
    assert excinfo.value.certificate.witness is not None
    assert excinfo.value.certificate.violation_value == pytest.approx(-3.0)


def test_solver_is_two_dimensional(mesh4):
    with pytest.raises(DimensionMismatchError):
        DirichletSolver(DoubleWell.model(3), mesh4)


def test_solve_options_validation():
    with pytest.raises(ConfigError):
        SolveOptions(grad_tol=0.0)
    with pytest.raises(ConfigError):
        SolveOptions(backtrack_ratio=1.5)
    options = SolveOptions.from_config({"solver": {"grad_tol": 1e-7}}, max_iters=10, armijo_c=None)
    assert options.grad_tol == 1e-7
    assert options.max_iters == 10
    assert options.armijo_c == 1e-4


def test_energy_report_of_affine_field(model, mesh4):
    M = np.array([[0.5, 1.0], [0.0, 2.0]])
    report = energy_report(model, mesh4, VectorField.from_affine(mesh4, M))
    assert report.I == pytest.approx(float(evaluate(model, M)), rel=1e-12)
    assert report.I_L == pytest.approx(-8.0 * np.linalg.det(M), rel=1e-12)


@pytest.mark.slow
def test_uniqueness_probe_converges_to_one_minimizer(model, mesh4):
    y0 = VectorField.from_affine(mesh4, np.eye(2))
    report = uniqueness_probe(model, mesh4, y0, starts=5, seed=0)
    assert all(r.converged for r in report.results)
    assert report.max_pairwise_dist <= 1e-5
    assert report.energy_spread <= 1e-8
    assert report.seeds == [0, 1, 2, 3, 4]


def test_uniqueness_probe_equal_seeds_give_identical_solves(model, mesh4):
    y0 = VectorField.from_affine(mesh4, np.eye(2))
    report = uniqueness_probe(model, mesh4, y0, SolveOptions(grad_tol=1e-6), seeds=[7, 7])
    assert report.max_pairwise_dist == 0.0
    assert report.energy_spread == 0.0


def test_uniqueness_probe_needs_two_starts(model, mesh4):
    with pytest.raises(ValueError):
        uniqueness_probe(model, mesh4, VectorField.zeros(mesh4), starts=1)


def test_uniqueness_probe_uses_certify_options(mesh4):
    near = DoubleWell(np.diag([1.0001, 1.0]), -np.eye(2))
    y0 = VectorField.from_affine(mesh4, np.eye(2))
    with pytest.raises(NotPolyconvexError):
        uniqueness_probe(near, mesh4, y0, seeds=[3, 3])
    report = uniqueness_probe(near, mesh4, y0, SolveOptions(grad_tol=1e-6), seeds=[3, 3],
                              certify_options=CertifyOptions(tol=1e-3))
    assert report.max_pairwise_dist == 0.0
