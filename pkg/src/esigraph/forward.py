"""Lead fields, whitening, and the plain-text matrix format.

The synthetic lead field places a unit radial current dipole at every
mesh vertex inside an infinite homogeneous conductor and evaluates its
potential at each sensor, then subtracts the per-column mean (average
reference).  Realistic layered-head conduction is out of scope; this
keeps the ill-posed, spatially correlated structure of a real operator
at desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .mesh import SpatialBasis, TriangleMesh, hemisphere_centers

BRAIN_CONDUCTIVITY_S_PER_M = 0.3


@dataclass
class SensorArray:
    """Sensor positions in millimeters, shape (N_c, 3)."""

    positions: np.ndarray

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        if self.positions.ndim != 2 or self.positions.shape[1] != 3:
            raise ValueError("sensor positions must be (N_c, 3)")

    @property
    def n_sensors(self) -> int:
        return self.positions.shape[0]


@dataclass
class LeadField:
    """Linear forward operator, N_c x N_s.

    composed_with_basis marks operators already right-multiplied by the
    spatial basis; solvers given such an operator return coefficients in
    basis space.
    """

    matrix: np.ndarray
    composed_with_basis: bool = False

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("lead field has non-finite entries")
        if np.any(np.linalg.norm(self.matrix, axis=0) == 0):
            raise ValueError("lead field has an all-zero column")

    @property
    def shape(self):
        return self.matrix.shape


def fibonacci_sensor_array(n_sensors: int, radius: float, cap: float = 1.0) -> SensorArray:
    """n_sensors points on a spherical cap of the given radius (Fibonacci spiral).

    cap is the covered fraction of the sphere: 1.0 is the full sphere,
    0.5 the upper half.  Deterministic, roughly uniform coverage; a
    partial cap stands in for an electrode cap, which is what makes
    lateral/inferior sources genuinely hard to localize.
    """
    if n_sensors < 1:
        raise ValueError("need at least one sensor")
    if not 0 < cap <= 1:
        raise ValueError("cap must be in (0, 1]")
    i = np.arange(n_sensors)
    golden = (1 + 5**0.5) / 2
    z = 1 - cap * (2 * i + 1) / n_sensors
    theta = 2 * np.pi * i / golden
    r = np.sqrt(np.maximum(0.0, 1 - z * z))
    pts = np.column_stack([r * np.cos(theta), r * np.sin(theta), z]) * radius
    return SensorArray(pts)


def synth_lead_field(sensors: SensorArray, mesh: TriangleMesh) -> LeadField:
    """Infinite-homogeneous-conductor dipole lead field, average referenced.

    Column s holds the potential of a unit dipole at vertex s, oriented
    along the outward radial direction of its hemisphere:
    v = (1/(4 pi sigma)) * q . (r - r_s) / |r - r_s|^3, sigma = 0.3 S/m.
    """
    if sensors.n_sensors == 0 or mesh.n_vertices == 0:
        raise ValueError("sensors and mesh must be nonempty")
    centers = hemisphere_centers(mesh)
    src = mesh.vertices
    orient = src - centers[mesh.hemisphere]
    norms = np.linalg.norm(orient, axis=1, keepdims=True)
    if np.any(norms < 1e-12):
        raise ValueError("source vertex coincides with its hemisphere center")
    orient = orient / norms

    # diff[c, s, :] = sensor c minus source s
    diff = sensors.positions[:, None, :] - src[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    if np.any(dist < 1e-6):
        raise ValueError("a sensor coincides with a source vertex")
    L = np.einsum("csk,sk->cs", diff, orient) / (
        4.0 * np.pi * BRAIN_CONDUCTIVITY_S_PER_M * dist**3
    )
    L = L - L.mean(axis=0, keepdims=True)
    return LeadField(L, composed_with_basis=False)


def compose_with_basis(lead: LeadField, basis: SpatialBasis) -> LeadField:
    """Right-multiply the lead field by the spatial basis."""
    if lead.composed_with_basis:
        raise ValueError("lead field is already composed with a basis")
    if lead.matrix.shape[1] != basis.n_sources:
        raise ValueError("lead field and basis sizes do not match")
    composed = np.ascontiguousarray(lead.matrix @ basis.psi)
    return LeadField(composed, composed_with_basis=True)


def whiten(X: np.ndarray, noise_cov: np.ndarray) -> np.ndarray:
    """Apply W = chol(noise_cov)^-1 so the whitened noise covariance is I.

    Callers must whiten the lead field with the same transform.
    """
    X = np.asarray(X, dtype=float)
    noise_cov = np.asarray(noise_cov, dtype=float)
    if noise_cov.shape[0] != noise_cov.shape[1] or noise_cov.shape[0] != X.shape[0]:
        raise ValueError("noise covariance must be square and match X rows")
    if not np.allclose(noise_cov, noise_cov.T, atol=1e-10 * max(1.0, np.abs(noise_cov).max())):
        raise ValueError("noise covariance must be symmetric")
    try:
        chol = np.linalg.cholesky(noise_cov)
    except np.linalg.LinAlgError as exc:
        raise ValueError("noise covariance is not positive definite") from exc
    return scipy.linalg.solve_triangular(chol, X, lower=True)


def save_matrix(path, M: np.ndarray, comment: str | None = None) -> None:
    """Write a matrix as "rows R cols C" plus row-major decimals.

    Values use repr precision so a load round-trips bit-exactly.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        fh.write(f"rows {M.shape[0]} cols {M.shape[1]}\n")
        for row in M:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_matrix(path) -> np.ndarray:
    """Read a matrix written by save_matrix; '#' lines are comments."""
    values: list[float] = []
    shape = None
    with open(path) as fh:
        for no, raw in enumerate(fh, 1):
            ln = raw.strip()
            if not ln or ln.startswith("#"):
                continue
            if shape is None:
                parts = ln.split()
                if len(parts) != 4 or parts[0] != "rows" or parts[2] != "cols":
                    raise ValueError(f"{path}:{no}: bad header {ln!r}")
                try:
                    shape = (int(parts[1]), int(parts[3]))
                except ValueError as exc:
                    raise ValueError(f"{path}:{no}: bad header {ln!r}") from exc
                continue
            for tok in ln.split():
                try:
                    values.append(float(tok))
                except ValueError as exc:
                    raise ValueError(f"{path}:{no}: bad value {tok!r}") from exc
    if shape is None:
        raise ValueError(f"{path}: empty matrix file")
    if len(values) != shape[0] * shape[1]:
        raise ValueError(
            f"{path}: header says {shape[0]}x{shape[1]} but found {len(values)} values"
        )
    return np.array(values).reshape(shape)
