"""Experiment orchestration shared by the CLI subcommands.

One benchmark cell = (channel SNR, source SNR, repetition).  Cells are
independently seeded by hashing their coordinates against the master
seed, so any cell can be rerun in isolation and grids can execute in
parallel without changing results.

Sparse solvers (MCE, l21, proposed) run on a normalized problem: the
composed lead field is scaled to unit mean column norm and the
measurements to unit RMS entry, and the estimate is scaled back
afterwards.  This keeps the published penalty values meaningful
regardless of the physical scale of a synthetic or file-loaded lead
field.  MNE and sLORETA are linear in X with a scale-aware ridge, so
they run on the raw inputs.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from . import baselines
from .config import ExperimentConfig
from .forward import LeadField, compose_with_basis, fibonacci_sensor_array, synth_lead_field
from .mesh import SpatialBasis, TriangleMesh, apply_basis, build_spatial_basis, build_two_hemisphere_mesh
from .metrics import MetricReport, evaluate
from .model import Hyperparams, ModelState, fit, to_source_space
from .simulate import GroundTruth, SimulationConfig, simulate


@dataclass
class Workspace:
    """Deterministic per-config geometry: mesh, basis, sensors, lead fields."""

    mesh: TriangleMesh
    basis: SpatialBasis
    lead_raw: LeadField
    lead_composed: LeadField


_workspace_cache: dict[str, Workspace] = {}


def build_workspace(cfg: ExperimentConfig) -> Workspace:
    mesh = build_two_hemisphere_mesh(cfg.mesh_subdivisions, cfg.mesh_radius, cfg.mesh_separation)
    basis = build_spatial_basis(mesh, rho=cfg.basis_rho, k=cfg.basis_neighbors)
    radius = cfg.sensor_radius
    if radius is None:
        radius = 1.15 * (cfg.mesh_separation / 2.0 + cfg.mesh_radius)
    sensors = fibonacci_sensor_array(cfg.sensor_count, radius, cap=cfg.sensor_cap)
    lead_raw = synth_lead_field(sensors, mesh)
    lead_composed = compose_with_basis(lead_raw, basis)
    return Workspace(mesh=mesh, basis=basis, lead_raw=lead_raw, lead_composed=lead_composed)


def cached_workspace(cfg: ExperimentConfig, key: str) -> Workspace:
    """Per-process workspace cache keyed by config hash."""
    ws = _workspace_cache.get(key)
    if ws is None:
        ws = build_workspace(cfg)
        _workspace_cache.clear()
        _workspace_cache[key] = ws
    return ws


def cell_seed(master_seed: int, snr_channel_db: float, snr_source_db: float, rep: int) -> int:
    """Stable per-cell sub-seed: master XOR sha256(cell coordinates)."""
    tag = f"{float(snr_channel_db)!r}|{float(snr_source_db)!r}|{int(rep)}"
    digest = hashlib.sha256(tag.encode()).digest()
    return (int.from_bytes(digest[:8], "big") ^ (master_seed & (2**64 - 1))) & (2**63 - 1)


def simulation_config(
    cfg: ExperimentConfig, snr_channel_db: float, snr_source_db: float, rep: int
) -> SimulationConfig:
    return SimulationConfig(
        n_states=cfg.sim_n_states,
        samples_per_state=cfg.sim_samples_per_state,
        sample_rate_hz=cfg.sim_sample_rate_hz,
        snr_channel_db=snr_channel_db,
        snr_source_db=snr_source_db,
        patch_radius=cfg.sim_patch_radius,
        seed=cell_seed(cfg.seed, snr_channel_db, snr_source_db, rep),
    )


def normalize_problem(L_tilde: np.ndarray, X: np.ndarray):
    """Scale to unit mean column norm / unit RMS entry; returns scalars too."""
    nu_l = float(np.linalg.norm(L_tilde, axis=0).mean())
    if nu_l == 0:
        nu_l = 1.0
    nu_x = float(np.sqrt(np.mean(X * X)))
    if nu_x == 0:
        nu_x = 1.0
    return L_tilde / nu_l, X / nu_x, nu_l, nu_x


def proposed_hyperparams(cfg: ExperimentConfig, seed: int) -> Hyperparams:
    return Hyperparams(
        lam=cfg.proposed_lambda,
        beta=cfg.proposed_beta,
        alpha=cfg.proposed_alpha,
        gamma1=cfg.proposed_gamma1,
        gamma2=cfg.proposed_gamma2,
        K=cfg.proposed_landmarks,
        max_outer_iter=cfg.proposed_max_outer_iter,
        outer_tol=cfg.proposed_outer_tol,
        inner_tol=cfg.proposed_inner_tol,
        inner_max_iter=cfg.proposed_inner_max_iter,
        seed=seed,
    )


def run_method(
    ws: Workspace, cfg: ExperimentConfig, method: str, X: np.ndarray, seed: int
):
    """Run one solver; returns (S_hat in source space, ModelState or None)."""
    if method == "mne":
        reg = cfg.mne_reg or baselines.default_regularization(ws.lead_raw)
        return baselines.mne_solve(ws.lead_raw, X, reg), None
    if method == "sloreta":
        reg = cfg.sloreta_reg or baselines.default_regularization(ws.lead_raw)
        return baselines.sloreta_solve(ws.lead_raw, X, reg), None
    A, B, nu_l, nu_x = normalize_problem(ws.lead_composed.matrix, X)
    back = nu_x / nu_l
    if method == "mce":
        S_hat, _ = baselines.mce_solve(
            LeadField(A, composed_with_basis=True), B, cfg.mce_gamma, ws.basis,
            tol=cfg.baseline_tol, max_iter=cfg.baseline_max_iter,
        )
        return S_hat * back, None
    if method == "l21":
        S_hat, _ = baselines.l21_solve(
            LeadField(A, composed_with_basis=True), B, cfg.l21_mu, ws.basis,
            tol=cfg.baseline_tol, max_iter=cfg.baseline_max_iter,
        )
        return S_hat * back, None
    if method == "proposed":
        state = fit(B, LeadField(A, composed_with_basis=True), proposed_hyperparams(cfg, seed))
        return to_source_space(state, ws.basis) * back, state
    raise ValueError(f"unknown method {method!r}")


@dataclass
class CellResult:
    snr_channel_db: float
    snr_source_db: float
    rep: int
    seed: int
    reports: dict  # method -> MetricReport
    states: dict  # method -> ModelState (proposed only)


def run_cell(
    cfg: ExperimentConfig,
    snr_channel_db: float,
    snr_source_db: float,
    rep: int,
    methods=None,
    ws: Workspace | None = None,
    workspace_key: str = "",
    keep_states: bool = False,
) -> CellResult:
    """Simulate one cell, run every method on it, evaluate all metrics."""
    if ws is None:
        ws = cached_workspace(cfg, workspace_key)
    methods = tuple(methods or cfg.methods)
    sim_cfg = simulation_config(cfg, snr_channel_db, snr_source_db, rep)
    X, truth = simulate(ws.mesh, ws.lead_raw, sim_cfg)
    reports: dict[str, MetricReport] = {}
    states: dict[str, ModelState] = {}
    for method in methods:
        S_hat, state = run_method(ws, cfg, method, X, sim_cfg.seed)
        reports[method] = evaluate(ws.mesh, X, ws.lead_raw.matrix, S_hat, truth)
        if state is not None and keep_states:
            states[method] = state
    return CellResult(
        snr_channel_db=snr_channel_db,
        snr_source_db=snr_source_db,
        rep=rep,
        seed=sim_cfg.seed,
        reports=reports,
        states=states,
    )


def grid_cells(cfg: ExperimentConfig):
    """All (snr_channel_db, snr_source_db, rep) triples, deterministic order."""
    return [
        (c, s, r)
        for c in cfg.grid_snr_channel_db
        for s in cfg.grid_snr_source_db
        for r in range(cfg.grid_repetitions)
    ]
