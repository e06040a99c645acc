import numpy as np
import pytest

from core.decompose import eval_null, from_wells
from core.energy import DoubleWell, evaluate
from fem.mesh import (
    Mesh2,
    VectorField,
    gradients,
    integrate,
    null_lagrangian_gap,
    unit_square_mesh,
)
from utils.errors import BoundaryMismatchError, MeshValidationError

pytestmark = pytest.mark.fem


@pytest.mark.parametrize("m", [1, 2, 4, 8])
def test_unit_square_mesh_counts(m):
    mesh = unit_square_mesh(m)
    assert mesh.num_nodes == (m + 1) ** 2
    assert mesh.num_triangles == 2 * m * m
    assert mesh.boundary_nodes.size == 4 * m
    assert mesh.interior_nodes.size == (m - 1) ** 2
    assert mesh.total_area == pytest.approx(1.0, abs=1e-14)
    assert np.all(mesh.areas > 0)


def test_unit_square_boundary_nodes_lie_on_the_boundary():
    mesh = unit_square_mesh(4)
    x = mesh.nodes[mesh.boundary_nodes]
    on_edge = np.isclose(x, 0.0) | np.isclose(x, 1.0)
    assert np.all(on_edge.any(axis=1))
    assert not np.any((np.isclose(mesh.nodes[mesh.interior_nodes], 0.0)
                       | np.isclose(mesh.nodes[mesh.interior_nodes], 1.0)).any(axis=1))


def test_mesh_rejects_invalid_input():
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(MeshValidationError, match="clockwise"):
        Mesh2(nodes, np.array([[0, 2, 1]]))
    with pytest.raises(MeshValidationError, match="degenerate"):
        Mesh2(np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]), np.array([[0, 1, 2]]))
    with pytest.raises(MeshValidationError, match="out of range"):
        Mesh2(nodes, np.array([[0, 1, 3]]))
    with pytest.raises(MeshValidationError, match="boundary_nodes"):
        Mesh2(nodes, np.array([[0, 1, 2]]), boundary_nodes=[0, 1])


def test_mesh_json_round_trip():
    mesh = unit_square_mesh(2)
    restored = Mesh2.from_json(mesh.to_json())
    np.testing.assert_array_equal(restored.nodes, mesh.nodes)
    np.testing.assert_array_equal(restored.triangles, mesh.triangles)
    np.testing.assert_array_equal(restored.boundary_nodes, mesh.boundary_nodes)


def test_affine_field_has_constant_gradient():
    mesh = unit_square_mesh(3)
    M = np.array([[1.0, 2.0], [-0.5, 3.0]])
    y = VectorField.from_affine(mesh, M, [0.25, -1.0])
    G = gradients(mesh, y)
    np.testing.assert_allclose(G, np.broadcast_to(M, G.shape), atol=1e-13)


def test_gradient_of_single_triangle():
    mesh = Mesh2(np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]]), np.array([[0, 1, 2]]))
    y = np.array([[0.0, 0.0], [2.0, 2.0], [1.0, 1.0]])
    np.testing.assert_allclose(gradients(mesh, y)[0], [[1.0, 1.0], [1.0, 1.0]])


def test_integrate_affine_energy_is_area_times_density():
    mesh = unit_square_mesh(4)
    dw = DoubleWell.model(2)
    for M in (np.zeros((2, 2)), np.eye(2), np.array([[0.5, 1.0], [0.0, 2.0]])):
        y = VectorField.from_affine(mesh, M)
        expected = float(evaluate(dw, M))
        assert integrate(mesh, y, lambda G: evaluate(dw, G)) == pytest.approx(expected, rel=1e-12, abs=1e-12)
        assert integrate(mesh, y, lambda G: evaluate(dw, G), batched=True) == pytest.approx(expected, rel=1e-12, abs=1e-12)


NULL_LAGRANGIAN_WELLS = {
    "model": DoubleWell.model(2),
    "reflected_shifted": DoubleWell(
        np.array([[0.3, -0.2], [0.1, 0.5]]) + 1.5 * np.diag([1.0, -1.0]),
        np.array([[0.3, -0.2], [0.1, 0.5]]) - 1.5 * np.diag([1.0, -1.0]),
    ),
}


@pytest.mark.parametrize("wells_id", list(NULL_LAGRANGIAN_WELLS))
@pytest.mark.parametrize("m", [2, 4, 8])
def test_null_lagrangian_depends_only_on_boundary_values(m, wells_id):
    mesh = unit_square_mesh(m)
    dec = from_wells(NULL_LAGRANGIAN_WELLS[wells_id])
    if wells_id == "reflected_shifted":
        assert np.linalg.det(dec.Q) == pytest.approx(-1.0)
        assert np.any(dec.B)
    rng = np.random.default_rng(100 + m)
    interior = mesh.interior_nodes
    for _ in range(100):
        M = rng.standard_normal((2, 2))
        y1 = VectorField.from_function(mesh, lambda x: x @ M.T + np.column_stack([x[:, 1] ** 2, np.sin(3.0 * x[:, 0])]))
        values = y1.values.copy()
        values[interior] += rng.standard_normal((interior.size, 2))
        null1 = integrate(mesh, y1, lambda G: eval_null(dec, G), batched=True)
        null2 = integrate(mesh, values, lambda G: eval_null(dec, G), batched=True)
        scale = 1.0 + abs(null1) + abs(null2)
        assert null_lagrangian_gap(mesh, y1, values, dec) <= 1e-9 * scale


def test_null_lagrangian_gap_requires_equal_boundary_values():
    mesh = unit_square_mesh(2)
    dec = from_wells(DoubleWell.model(2))
    y1 = VectorField.zeros(mesh)
    values = y1.values.copy()
    values[mesh.boundary_nodes[0]] = [1.0, 0.0]
    with pytest.raises(BoundaryMismatchError):
        null_lagrangian_gap(mesh, y1, values, dec)


def test_field_must_match_mesh_size():
    mesh = unit_square_mesh(2)
    with pytest.raises(MeshValidationError):
        gradients(mesh, np.zeros((4, 2)))
    with pytest.raises(MeshValidationError):
        VectorField(np.full((3, 2), np.nan))
