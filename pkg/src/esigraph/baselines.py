"""Benchmark inverse solvers: MNE, sLORETA, MCE, and the l21 mixed norm.

MNE and sLORETA operate on the raw lead field; MCE and l21 expect one
composed with the spatial basis and return estimates mapped back to
source space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .forward import LeadField
from .mesh import SpatialBasis, apply_basis
from .solvers import (
    DEFAULT_TOL,
    STANDALONE_MAX_ITER,
    SolverReport,
    solve_group_l21,
    solve_l1_quad_batch,
)

METHODS = ("mne", "sloreta", "mce", "l21")

MCE_GAMMA_DEFAULT = 0.01
L21_MU_DEFAULT = 0.05


@dataclass
class BaselineConfig:
    method: str
    penalty: float | None = None  # sparsity weight for mce/l21
    regularization: float | None = None  # ridge level for mne/sloreta, None = auto
    tol: float = DEFAULT_TOL
    max_iter: int = STANDALONE_MAX_ITER

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.method in ("mce", "l21"):
            if self.penalty is None:
                self.penalty = MCE_GAMMA_DEFAULT if self.method == "mce" else L21_MU_DEFAULT
            if self.penalty <= 0:
                raise ValueError("penalty must be positive")
        if self.regularization is not None and self.regularization <= 0:
            raise ValueError("regularization must be positive")


def _matrix(L) -> np.ndarray:
    return L.matrix if isinstance(L, LeadField) else np.asarray(L, dtype=float)


def default_regularization(L) -> float:
    """Scale-aware ridge level trace(L L') / N_c * 1e-2."""
    Lm = _matrix(L)
    return float(np.sum(Lm * Lm) / Lm.shape[0] * 1e-2)


def mne_solve(L, X, reg: float) -> np.ndarray:
    """Minimum-norm estimate S = L'(L L' + reg I)^-1 X."""
    if reg <= 0:
        raise ValueError("reg must be positive")
    Lm = _matrix(L)
    gram = Lm @ Lm.T + reg * np.eye(Lm.shape[0])
    factor = scipy.linalg.cho_factor(gram, lower=True)
    return Lm.T @ scipy.linalg.cho_solve(factor, np.asarray(X, dtype=float))


def sloreta_solve(L, X, reg: float) -> np.ndarray:
    """Minimum-norm estimate standardized by the resolution diagonal.

    Row j of the output is the MNE row divided by sqrt((M L)_jj); a
    non-positive diagonal signals a degenerate lead field.
    """
    if reg <= 0:
        raise ValueError("reg must be positive")
    Lm = _matrix(L)
    gram = Lm @ Lm.T + reg * np.eye(Lm.shape[0])
    factor = scipy.linalg.cho_factor(gram, lower=True)
    Z = scipy.linalg.cho_solve(factor, Lm)  # (L L' + reg I)^-1 L
    resolution_diag = np.einsum("cj,cj->j", Z, Lm)
    if np.any(resolution_diag <= 0):
        raise ValueError("non-positive resolution diagonal; lead field is degenerate")
    S_hat = Z.T @ np.asarray(X, dtype=float)
    return S_hat / np.sqrt(resolution_diag)[:, None]


def mce_solve(
    L_composed,
    X,
    gamma: float,
    basis: SpatialBasis,
    tol: float = DEFAULT_TOL,
    max_iter: int = STANDALONE_MAX_ITER,
) -> tuple[np.ndarray, SolverReport]:
    """Per-column l1 inverse solve on the composed operator, mapped by psi."""
    if isinstance(L_composed, LeadField) and not L_composed.composed_with_basis:
        raise ValueError("mce_solve expects a lead field composed with the basis")
    Lm = _matrix(L_composed)
    Z, report = solve_l1_quad_batch(
        Lm, np.asarray(X, dtype=float), gamma, tol=tol, max_iter=max_iter
    )
    return apply_basis(basis, Z), report


def l21_solve(
    L_composed,
    X,
    mu: float,
    basis: SpatialBasis,
    tol: float = DEFAULT_TOL,
    max_iter: int = STANDALONE_MAX_ITER,
) -> tuple[np.ndarray, SolverReport]:
    """Row-group l21 inverse solve on the composed operator, mapped by psi."""
    if isinstance(L_composed, LeadField) and not L_composed.composed_with_basis:
        raise ValueError("l21_solve expects a lead field composed with the basis")
    Lm = _matrix(L_composed)
    Z, report = solve_group_l21(Lm, np.asarray(X, dtype=float), mu, tol=tol, max_iter=max_iter)
    return apply_basis(basis, Z), report
