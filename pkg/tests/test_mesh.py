import numpy as np
import pytest

from esigraph import (
    apply_basis,
    build_spatial_basis,
    build_two_hemisphere_mesh,
    geodesic_distance,
    geodesic_distances_from,
    load_mesh,
    nearest_geodesic_neighbors,
    save_mesh,
)
from esigraph.mesh import LEFT, RIGHT, validate_mesh

from oracles import floyd_warshall, relaxation_apsp


@pytest.mark.parametrize("sub,expected", [(0, 12), (1, 42), (2, 162)])
def test_icosphere_vertex_count(sub, expected):
    mesh = build_two_hemisphere_mesh(sub, 50.0, 110.0)
    assert np.count_nonzero(mesh.hemisphere == LEFT) == expected
    assert np.count_nonzero(mesh.hemisphere == RIGHT) == expected
    assert mesh.n_vertices == 2 * expected


def test_vertices_on_sphere():
    radius = 37.5
    mesh = build_two_hemisphere_mesh(1, radius, 90.0)
    centers = np.array([[-45.0, 0, 0], [45.0, 0, 0]])
    rel = mesh.vertices - centers[mesh.hemisphere]
    assert np.abs(np.linalg.norm(rel, axis=1) - radius).max() < 1e-9


def test_mesh_invariants(small_mesh):
    validate_mesh(small_mesh)
    # edge set symmetric by construction (stored once per unordered pair)
    assert np.all(small_mesh.edges[:, 0] < small_mesh.edges[:, 1])
    assert np.all(small_mesh.edge_lengths > 0)


def test_bad_mesh_rejected(small_mesh):
    import dataclasses

    broken = dataclasses.replace(small_mesh)
    broken.hemisphere = small_mesh.hemisphere.copy()
    broken.hemisphere[0] = RIGHT  # creates cross-hemisphere edges
    with pytest.raises(ValueError):
        validate_mesh(broken)


def test_geodesic_identity_and_single_edge(small_mesh):
    assert geodesic_distance(small_mesh, 3, 3) == 0.0
    a, b = small_mesh.edges[0]
    direct = small_mesh.edge_lengths[0]
    assert geodesic_distance(small_mesh, int(a), int(b)) <= direct + 1e-12


def test_geodesic_matches_floyd_warshall(small_mesh):
    # Floyd-Warshall value check (float-association dust tolerance) plus
    # bitwise equality against the relaxation fixpoint oracle
    FW = floyd_warshall(small_mesh)
    R = relaxation_apsp(small_mesh)
    for i in range(0, small_mesh.n_vertices, 5):
        row = geodesic_distances_from(small_mesh, i)
        finite = np.isfinite(FW[i])
        assert np.array_equal(finite, np.isfinite(row))
        assert np.abs(row[finite] - FW[i][finite]).max() <= 1e-9
        assert np.array_equal(row, R[i])


def test_geodesic_cross_hemisphere_infinite(small_mesh):
    left = small_mesh.hemisphere_vertices(LEFT)[0]
    right = small_mesh.hemisphere_vertices(RIGHT)[0]
    assert geodesic_distance(small_mesh, int(left), int(right)) == np.inf


def test_geodesic_symmetry_and_triangle(small_mesh):
    rng = np.random.default_rng(0)
    idx = small_mesh.hemisphere_vertices(LEFT)
    rows = {int(i): geodesic_distances_from(small_mesh, int(i)) for i in idx[:12]}
    for _ in range(60):
        i, j, k = (int(v) for v in rng.choice(idx[:12], size=3))
        assert rows[i][j] == pytest.approx(rows[j][i], abs=1e-12)
        assert rows[i][j] <= rows[i][k] + rows[k][j] + 1e-9


def test_geodesic_index_errors(small_mesh):
    with pytest.raises(IndexError):
        geodesic_distance(small_mesh, -1, 0)
    with pytest.raises(IndexError):
        geodesic_distances_from(small_mesh, small_mesh.n_vertices)


def test_nearest_neighbors_match_sort(small_mesh):
    D = relaxation_apsp(small_mesh)
    for i in (0, 7, 50):
        got = nearest_geodesic_neighbors(small_mesh, i, 6)
        row = D[i].copy()
        row[i] = np.inf
        expected = np.argsort(row, kind="stable")[:6]
        assert np.array_equal(got, expected)
        assert i not in got


def test_nearest_neighbors_k_validation(small_mesh):
    hemi_count = int(np.count_nonzero(small_mesh.hemisphere == LEFT))
    with pytest.raises(ValueError):
        nearest_geodesic_neighbors(small_mesh, 0, hemi_count)
    with pytest.raises(ValueError):
        nearest_geodesic_neighbors(small_mesh, 0, 0)


def test_spatial_basis_values(small_mesh):
    rho = float(small_mesh.edge_lengths.mean())
    basis = build_spatial_basis(small_mesh, rho=rho, k=6)
    psi = basis.psi.toarray()
    assert np.allclose(np.diag(psi), 1.0)
    off = psi - np.diag(np.diag(psi))
    assert off.min() >= 0.0 and off.max() < 1.0
    # column i: unit diagonal plus exp(-(d/rho)^2) on the k nearest
    i = 11
    omega = nearest_geodesic_neighbors(small_mesh, i, 6)
    d = geodesic_distances_from(small_mesh, i)[omega]
    assert psi[omega, i] == pytest.approx(np.exp(-((d / rho) ** 2)))
    others = np.setdiff1d(np.arange(small_mesh.n_vertices), np.append(omega, i))
    assert np.all(psi[others, i] == 0.0)


def test_spatial_basis_kernel_at_rho_distance(small_mesh):
    # any neighbor at exactly distance rho gets weight exp(-1)
    i = 0
    omega = nearest_geodesic_neighbors(small_mesh, i, 6)
    d = geodesic_distances_from(small_mesh, i)[omega[0]]
    basis = build_spatial_basis(small_mesh, rho=d, k=6)
    assert basis.psi.toarray()[omega[0], i] == pytest.approx(np.exp(-1.0))


def test_spatial_basis_density(small_mesh):
    basis = build_spatial_basis(small_mesh, k=6)
    assert basis.psi.nnz == small_mesh.n_vertices * 7
    counts = np.diff(basis.psi.indptr)
    assert np.all(counts == 7)


def test_apply_basis_identity_and_oracle(small_mesh):
    rng = np.random.default_rng(1)
    basis = build_spatial_basis(small_mesh, k=6)
    n = small_mesh.n_vertices
    assert np.allclose(apply_basis(basis, np.eye(n)), basis.psi.toarray())
    M = rng.standard_normal((n, 4))
    assert np.allclose(apply_basis(basis, M), basis.psi.toarray() @ M, atol=1e-12)
    # rho -> 0: every off-diagonal underflows, psi @ M = M
    tiny = build_spatial_basis(small_mesh, rho=1e-3, k=6)
    assert np.abs(apply_basis(tiny, M) - M).max() < 1e-12


def test_apply_basis_dimension_mismatch(small_mesh):
    basis = build_spatial_basis(small_mesh, k=6)
    with pytest.raises(ValueError):
        apply_basis(basis, np.zeros((3, 2)))


def test_mesh_roundtrip(tmp_path, small_mesh):
    path = tmp_path / "mesh.txt"
    save_mesh(path, small_mesh, comment="roundtrip check")
    back = load_mesh(path)
    assert np.array_equal(back.vertices, small_mesh.vertices)
    assert np.array_equal(back.faces, small_mesh.faces)
    assert np.array_equal(back.hemisphere, small_mesh.hemisphere)


def test_mesh_load_errors(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("vertices 2 faces 0\n0 0 0 left\n")
    with pytest.raises(ValueError):
        load_mesh(bad)
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    with pytest.raises(ValueError):
        load_mesh(empty)
