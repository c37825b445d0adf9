"""Evaluation metrics: data fit, reconstruction error, LE, and AUC.

Localization error and AUC are computed per activation state from the
time-averaged absolute source magnitude over that state's samples; LE
is reported per hemisphere because the hemispheres are geodesically
disconnected.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .mesh import LEFT, RIGHT, TriangleMesh, geodesic_distance, geodesic_distances_from
from .simulate import GroundTruth

log = logging.getLogger(__name__)


@dataclass
class MetricReport:
    df: float
    re: float
    le_left_mm: float
    le_right_mm: float
    le_mean_mm: float
    auc: float

    CSV_HEADER = "method,snr_channel_db,snr_source_db,seed,df,re,le_mean_mm,auc"

    def csv_row(self, method: str, snr_channel_db: float, snr_source_db: float, seed: int) -> str:
        return ",".join(
            [
                method,
                repr(float(snr_channel_db)),
                repr(float(snr_source_db)),
                str(seed),
                repr(float(self.df)),
                repr(float(self.re)),
                repr(float(self.le_mean_mm)),
                repr(float(self.auc)),
            ]
        )


def data_fit(X: np.ndarray, L: np.ndarray, S_hat: np.ndarray) -> float:
    """|1 - E_res/E_tot| with E_tot the variation around the temporal mean."""
    X = np.asarray(X, dtype=float)
    centered = X - X.mean(axis=1, keepdims=True)
    e_tot = float(np.sum(centered * centered))
    if e_tot == 0:
        raise ValueError("X is constant across time; data fit is undefined")
    resid = X - np.asarray(L) @ np.asarray(S_hat)
    e_res = float(np.sum(resid * resid))
    return abs(1.0 - e_res / e_tot)


def reconstruction_error(S_hat: np.ndarray, S_true: np.ndarray) -> float:
    """Relative squared Frobenius error |S_hat - S_true|^2 / |S_true|^2."""
    S_true = np.asarray(S_true, dtype=float)
    denom = float(np.sum(S_true * S_true))
    if denom == 0:
        raise ValueError("S_true is all zero")
    diff = np.asarray(S_hat, dtype=float) - S_true
    return float(np.sum(diff * diff)) / denom


def _state_scores(S_hat: np.ndarray, truth: GroundTruth, state: int) -> np.ndarray:
    t0, t1 = truth.state_range(state)
    return np.abs(np.asarray(S_hat, dtype=float)[:, t0:t1]).mean(axis=1)


def hemisphere_diameter(mesh: TriangleMesh, hemi: int) -> float:
    """Largest finite geodesic distance within one hemisphere."""
    idx = mesh.hemisphere_vertices(hemi)
    best = 0.0
    for v in idx:
        d = geodesic_distances_from(mesh, int(v))[idx]
        best = max(best, float(d[np.isfinite(d)].max()))
    return best


def localization_error(
    mesh: TriangleMesh, S_hat: np.ndarray, truth: GroundTruth, state: int
) -> tuple[float, float]:
    """Geodesic distance from each hemisphere's energy peak to the truth.

    The estimated location is the vertex maximizing the time-averaged
    |S_hat| over the state's samples within that hemisphere.  An
    all-zero hemisphere estimate scores the hemisphere's geodesic
    diameter (worst case) and logs a warning.
    """
    if not 0 <= state < truth.n_states:
        raise IndexError(f"state {state} out of range")
    scores = _state_scores(S_hat, truth, state)
    result = []
    for hemi in (LEFT, RIGHT):
        idx = mesh.hemisphere_vertices(hemi)
        sub = scores[idx]
        if sub.max() == 0:
            log.warning("all-zero estimate in %s hemisphere; LE set to hemisphere diameter",
                        ("left", "right")[hemi])
            result.append(hemisphere_diameter(mesh, hemi))
            continue
        estimated = int(idx[int(np.argmax(sub))])
        result.append(geodesic_distance(mesh, estimated, truth.centers[state][hemi]))
    return result[0], result[1]


def auc(S_hat: np.ndarray, truth: GroundTruth, state: int) -> float:
    """ROC area for detecting the state's active patches.

    Scores are per-vertex time-averaged |S_hat| over the state; the
    rank-statistic form with midrank tie handling.
    """
    scores = _state_scores(S_hat, truth, state)
    labels = np.zeros(scores.shape[0], dtype=bool)
    labels[truth.active_union(state)] = True
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("state has no active or no inactive vertices")
    ranks = rankdata(scores)
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def evaluate(
    mesh: TriangleMesh, X: np.ndarray, L: np.ndarray, S_hat: np.ndarray, truth: GroundTruth
) -> MetricReport:
    """All four metrics; LE and AUC averaged over states."""
    df = data_fit(X, L, S_hat)
    re = reconstruction_error(S_hat, truth.S_true)
    lefts, rights, aucs = [], [], []
    for s in range(truth.n_states):
        le_l, le_r = localization_error(mesh, S_hat, truth, s)
        lefts.append(le_l)
        rights.append(le_r)
        aucs.append(auc(S_hat, truth, s))
    le_left = float(np.mean(lefts))
    le_right = float(np.mean(rights))
    return MetricReport(
        df=df,
        re=re,
        le_left_mm=le_left,
        le_right_mm=le_right,
        le_mean_mm=(le_left + le_right) / 2.0,
        auc=float(np.mean(aucs)),
    )
