"""Matplotlib rendering for the report outputs.

Every figure is written straight to a file (Agg backend, no display);
the CSVs next to them remain the canonical machine-readable output.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_METRIC_LABELS = {"le_mm": "LE (mm)", "re": "RE", "auc": "AUC", "df": "DF"}


def _fmt_snr(v: float) -> str:
    return "inf" if np.isinf(v) else f"{v:g}"


def render_cell_boxplots(rows: list[dict], snr_c: float, snr_s: float, out_path) -> None:
    """LE / RE / AUC boxplots across repetitions for one SNR cell."""
    cell = [r for r in rows if r["snr_c_db"] == snr_c and r["snr_s_db"] == snr_s]
    methods = sorted({r["method"] for r in cell})
    fig, axes = plt.subplots(1, 3, figsize=(10, 3.2))
    for ax, metric in zip(axes, ("le_mm", "re", "auc")):
        data = [[r[metric] for r in cell if r["method"] == m] for m in methods]
        ax.boxplot(data, tick_labels=methods)
        ax.set_ylabel(_METRIC_LABELS[metric])
        ax.tick_params(axis="x", rotation=45)
        ax.grid(True, alpha=0.3)
    fig.suptitle(f"SNR_C = {_fmt_snr(snr_c)} dB, SNR_S = {_fmt_snr(snr_s)} dB")
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)


def render_summary(agg_rows: list[dict], out_path) -> None:
    """Mean LE / RE / AUC versus channel SNR, one panel row per source SNR."""
    snr_s_levels = sorted({r["snr_s_db"] for r in agg_rows}, reverse=True)
    methods = sorted({r["method"] for r in agg_rows})
    metrics = ("le_mm", "re", "auc")
    fig, axes = plt.subplots(
        len(snr_s_levels), len(metrics),
        figsize=(3.4 * len(metrics), 2.6 * len(snr_s_levels)),
        squeeze=False,
    )
    for i, snr_s in enumerate(snr_s_levels):
        for j, metric in enumerate(metrics):
            ax = axes[i][j]
            for m in methods:
                pts = sorted(
                    (r["snr_c_db"], r[metric])
                    for r in agg_rows
                    if r["method"] == m and r["snr_s_db"] == snr_s
                )
                if pts:
                    ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=m)
            ax.set_xlabel("SNR_C (dB)")
            ax.set_ylabel(_METRIC_LABELS[metric])
            ax.set_title(f"SNR_S = {_fmt_snr(snr_s)} dB", fontsize=9)
            ax.invert_xaxis()  # noise increases to the right
            ax.grid(True, alpha=0.3)
    axes[0][0].legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)


def render_tree_projection(coords: np.ndarray, edges: np.ndarray, out_path) -> None:
    """3-D scatter of projected landmarks with the spanning tree drawn."""
    fig = plt.figure(figsize=(5, 4.5))
    ax = fig.add_subplot(111, projection="3d")
    ax.scatter(coords[:, 0], coords[:, 1], coords[:, 2], c="tab:blue", s=25)
    for a, b in edges:
        seg = coords[[a, b]]
        ax.plot(seg[:, 0], seg[:, 1], seg[:, 2], c="tab:gray", lw=1.0)
    for k, (x, y, z) in enumerate(coords):
        ax.text(x, y, z, str(k), fontsize=6)
    ax.set_xlabel("PC1")
    ax.set_ylabel("PC2")
    ax.set_zlabel("PC3")
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)


def render_objective_trace(trace: list[float], out_path) -> None:
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.plot(range(len(trace)), trace, marker=".")
    ax.set_xlabel("outer iteration")
    ax.set_ylabel("objective")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
