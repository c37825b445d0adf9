"""Synthetic state-switching source activity and SNR-controlled noise.

The protocol: pick one activation center per hemisphere per state,
grow each into a geodesic patch, drive each patch with a stationary
AR(5) time course, concatenate the states in time, then inject white
noise at exact empirical SNR levels in source space and again in
channel space after forward projection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.signal

from .forward import LeadField
from .mesh import LEFT, RIGHT, TriangleMesh, geodesic_distances_from

AR_ORDER = 5
AR_BURN_IN = 500
POLE_RADIUS_RANGE = (0.5, 0.95)


@dataclass
class SimulationConfig:
    n_states: int = 3
    samples_per_state: int = 200
    sample_rate_hz: float = 100.0
    snr_channel_db: float = math.inf
    snr_source_db: float = math.inf
    patch_radius: float = 20.0  # mm, geodesic
    seed: int = 0

    def __post_init__(self):
        if self.n_states < 1 or self.samples_per_state < 1:
            raise ValueError("n_states and samples_per_state must be >= 1")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if self.patch_radius < 0:
            raise ValueError("patch_radius must be >= 0")

    @property
    def n_samples(self) -> int:
        return self.n_states * self.samples_per_state


@dataclass
class Patch:
    """One activation site: a center vertex plus its geodesic ball."""

    center: int
    vertices: np.ndarray
    distances: np.ndarray


@dataclass
class GroundTruth:
    """Clean simulated sources plus everything metrics need.

    active_vertices[state][hemi] lists the patch members and
    centers[state][hemi] the patch center, hemi indexed LEFT/RIGHT.
    state_boundaries holds the interior sample indices where the
    activation pattern switches.
    """

    S_true: np.ndarray
    active_vertices: list
    centers: list
    state_boundaries: np.ndarray

    @property
    def n_states(self) -> int:
        return len(self.centers)

    def state_range(self, state: int) -> tuple[int, int]:
        starts = [0, *self.state_boundaries.tolist()]
        ends = [*self.state_boundaries.tolist(), self.S_true.shape[1]]
        return starts[state], ends[state]

    def active_union(self, state: int) -> np.ndarray:
        return np.unique(np.concatenate(self.active_vertices[state]))


def gen_ar5(n: int, seed) -> np.ndarray:
    """Unit-variance stationary AR(5) series of length n.

    Poles are two conjugate pairs plus one real pole, radii uniform in
    [0.5, 0.95]; driven by unit Gaussian innovations with 500 burn-in
    samples discarded, then standardized to zero mean, unit variance.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    lo, hi = POLE_RADIUS_RANGE
    radii = rng.uniform(lo, hi, 3)
    angles = rng.uniform(0.0, np.pi, 2)
    pair0 = radii[0] * np.exp(1j * angles[0])
    pair1 = radii[1] * np.exp(1j * angles[1])
    real_pole = radii[2] * rng.choice([-1.0, 1.0])
    poles = np.array([pair0, pair0.conj(), pair1, pair1.conj(), real_pole])
    a = np.poly(poles).real
    innovations = rng.standard_normal(n + AR_BURN_IN)
    x = scipy.signal.lfilter([1.0], a, innovations)[AR_BURN_IN:]
    x = x - x.mean()
    std = x.std()
    return x / std if std > 0 else x


def select_patches(
    mesh: TriangleMesh, n_states: int, patch_radius: float, seed
) -> list[tuple[Patch, Patch]]:
    """Per state, one random geodesic patch per hemisphere.

    Centers are distinct across states within each hemisphere; a patch
    contains every vertex within patch_radius of its center.
    """
    if patch_radius < 0:
        raise ValueError("patch_radius must be >= 0")
    rng = np.random.default_rng(seed)
    centers_by_hemi = []
    for hemi in (LEFT, RIGHT):
        candidates = mesh.hemisphere_vertices(hemi)
        if candidates.size < n_states:
            raise ValueError(
                f"hemisphere has {candidates.size} vertices, need {n_states} distinct centers"
            )
        centers_by_hemi.append(rng.choice(candidates, size=n_states, replace=False))
    states = []
    for s in range(n_states):
        pair = []
        for hemi in (LEFT, RIGHT):
            center = int(centers_by_hemi[hemi][s])
            dist = geodesic_distances_from(mesh, center)
            members = np.flatnonzero(dist <= patch_radius)
            pair.append(Patch(center=center, vertices=members, distances=dist[members]))
        states.append(tuple(pair))
    return states


def build_ground_truth(mesh: TriangleMesh, cfg: SimulationConfig) -> GroundTruth:
    """Clean patch activity: one AR(5) course per (state, hemisphere).

    All vertices of a patch share the center's time course, scaled by a
    Gaussian falloff exp(-(d/patch_radius)^2) in geodesic distance (the
    center gets weight 1; a zero-radius patch is the bare center).
    """
    root = np.random.SeedSequence((cfg.seed, 0))
    keys = root.spawn(1 + 2 * cfg.n_states)
    patches = select_patches(mesh, cfg.n_states, cfg.patch_radius, keys[0])
    n_t = cfg.n_samples
    S_true = np.zeros((mesh.n_vertices, n_t))
    for s, pair in enumerate(patches):
        t0 = s * cfg.samples_per_state
        t1 = t0 + cfg.samples_per_state
        for hemi in (LEFT, RIGHT):
            patch = pair[hemi]
            series = gen_ar5(cfg.samples_per_state, keys[1 + 2 * s + hemi])
            if cfg.patch_radius > 0:
                weights = np.exp(-((patch.distances / cfg.patch_radius) ** 2))
            else:
                weights = np.ones(patch.vertices.size)
            S_true[patch.vertices, t0:t1] = weights[:, None] * series[None, :]
    boundaries = np.arange(1, cfg.n_states) * cfg.samples_per_state
    return GroundTruth(
        S_true=S_true,
        active_vertices=[tuple(p.vertices for p in pair) for pair in patches],
        centers=[tuple(p.center for p in pair) for pair in patches],
        state_boundaries=boundaries,
    )


def add_noise_snr(M: np.ndarray, snr_db: float, seed) -> np.ndarray:
    """Add white Gaussian noise hitting the target SNR exactly.

    SNR = 10 log10(Ps/Pn) with powers measured per entry; the noise is
    rescaled so the empirical ratio equals snr_db, not just its
    expectation.  snr_db = +inf returns the input unchanged.
    """
    M = np.asarray(M, dtype=float)
    if math.isinf(snr_db) and snr_db > 0:
        return M.copy()
    p_signal = float(np.sum(M * M)) / M.size
    if p_signal == 0:
        raise ValueError("cannot set a finite SNR on an all-zero signal")
    p_noise = p_signal / 10.0 ** (snr_db / 10.0)
    rng = np.random.default_rng(seed)
    E = rng.standard_normal(M.shape)
    E *= math.sqrt(p_noise * E.size / float(np.sum(E * E)))
    return M + E


def simulate(mesh: TriangleMesh, lead: LeadField, cfg: SimulationConfig):
    """Forward-project noisy sources: returns (X, clean GroundTruth).

    Source noise is ambient (all rows) and injected before projection;
    channel noise afterwards.  The returned ground truth is the clean
    signal, for metric evaluation.
    """
    if lead.composed_with_basis:
        raise ValueError("simulate needs the raw (uncomposed) lead field")
    if lead.matrix.shape[1] != mesh.n_vertices:
        raise ValueError("lead field does not match the mesh")
    truth = build_ground_truth(mesh, cfg)
    S_noisy = add_noise_snr(truth.S_true, cfg.snr_source_db, np.random.SeedSequence((cfg.seed, 1)))
    X = add_noise_snr(lead.matrix @ S_noisy, cfg.snr_channel_db, np.random.SeedSequence((cfg.seed, 2)))
    return X, truth
