import numpy as np
import pytest

from esigraph import (
    LeadField,
    SensorArray,
    build_spatial_basis,
    build_two_hemisphere_mesh,
    compose_with_basis,
    fibonacci_sensor_array,
    load_matrix,
    save_matrix,
    synth_lead_field,
    whiten,
)
from esigraph.mesh import hemisphere_centers


@pytest.fixture(scope="module")
def setup(small_mesh):
    sensors = fibonacci_sensor_array(16, 120.0)
    lead = synth_lead_field(sensors, small_mesh)
    return sensors, lead


def test_sensors_outside_spheres(small_mesh):
    sensors = fibonacci_sensor_array(24, 120.0, cap=0.5)
    centers = hemisphere_centers(small_mesh)
    for c in centers:
        d = np.linalg.norm(sensors.positions - c, axis=1)
        assert np.all(d > 50.0)
    # all positions distinct
    assert len({tuple(p) for p in sensors.positions}) == 24


def test_lead_field_average_referenced(setup):
    _, lead = setup
    assert np.abs(lead.matrix.sum(axis=0)).max() < 1e-9


def test_lead_field_no_zero_columns(setup):
    _, lead = setup
    assert np.all(np.linalg.norm(lead.matrix, axis=0) > 0)


def test_dipole_formula_and_sign_flip(small_mesh):
    sensors = fibonacci_sensor_array(10, 130.0)
    lead = synth_lead_field(sensors, small_mesh)
    centers = hemisphere_centers(small_mesh)
    v = 5
    r_s = small_mesh.vertices[v]
    q = r_s - centers[small_mesh.hemisphere[v]]
    q = q / np.linalg.norm(q)
    diff = sensors.positions - r_s
    raw = diff @ q / (4 * np.pi * 0.3 * np.linalg.norm(diff, axis=1) ** 3)
    assert np.allclose(lead.matrix[:, v], raw - raw.mean(), atol=1e-12)
    # linearity in the dipole moment: a flipped moment negates the column
    flipped = diff @ (-q) / (4 * np.pi * 0.3 * np.linalg.norm(diff, axis=1) ** 3)
    assert np.array_equal(flipped, -raw)


def test_inverse_square_scaling():
    # doubling every distance with fixed geometry ratios scales entries by 1/4
    mesh1 = build_two_hemisphere_mesh(0, 40.0, 100.0)
    mesh2 = build_two_hemisphere_mesh(0, 80.0, 200.0)
    s1 = fibonacci_sensor_array(12, 110.0)
    s2 = fibonacci_sensor_array(12, 220.0)
    L1 = synth_lead_field(s1, mesh1).matrix
    L2 = synth_lead_field(s2, mesh2).matrix
    assert np.allclose(L2, L1 / 4.0, rtol=1e-12)


def test_sensor_coincident_with_source(small_mesh):
    sensors = SensorArray(small_mesh.vertices[:3])
    with pytest.raises(ValueError):
        synth_lead_field(sensors, small_mesh)


def test_compose_with_basis(setup, small_mesh):
    _, lead = setup
    basis = build_spatial_basis(small_mesh, k=6)
    composed = compose_with_basis(lead, basis)
    assert composed.composed_with_basis
    assert np.allclose(composed.matrix, lead.matrix @ basis.psi.toarray(), atol=1e-12)
    with pytest.raises(ValueError):
        compose_with_basis(composed, basis)
    # identity limit: rho -> 0 underflows all off-diagonals
    tiny = build_spatial_basis(small_mesh, rho=1e-3, k=6)
    assert np.allclose(compose_with_basis(lead, tiny).matrix, lead.matrix, atol=1e-12)


def test_whiten_identity_and_scalar():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((6, 11))
    assert np.allclose(whiten(X, np.eye(6)), X)
    assert np.allclose(whiten(X, 4.0 * np.eye(6)), X / 2.0)


def test_whiten_random_spd():
    rng = np.random.default_rng(4)
    for _ in range(5):
        A = rng.standard_normal((7, 7))
        cov = A @ A.T + 7 * np.eye(7)
        W_applied = whiten(np.eye(7), cov)  # W itself
        assert np.abs(W_applied @ cov @ W_applied.T - np.eye(7)).max() < 1e-8


def test_whiten_rejects_bad_covariance():
    X = np.zeros((3, 2))
    with pytest.raises(ValueError):
        whiten(X, -np.eye(3))
    with pytest.raises(ValueError):
        whiten(X, np.array([[1.0, 2.0, 0], [0, 1, 0], [0, 0, 1]]))


def test_matrix_roundtrip(tmp_path):
    rng = np.random.default_rng(5)
    M = rng.standard_normal((5, 7))
    path = tmp_path / "m.txt"
    save_matrix(path, M, comment="provenance line")
    back = load_matrix(path)
    assert np.array_equal(back, M)  # bitwise


def test_matrix_parse_errors(tmp_path):
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    with pytest.raises(ValueError):
        load_matrix(empty)
    bad = tmp_path / "bad.txt"
    bad.write_text("rows 2 cols 3\n1 2 3 4 5\n")
    with pytest.raises(ValueError, match="found 5 values"):
        load_matrix(bad)
    junk = tmp_path / "junk.txt"
    junk.write_text("rows 1 cols 2\n1 quux\n")
    with pytest.raises(ValueError, match="junk.txt:2"):
        load_matrix(junk)
