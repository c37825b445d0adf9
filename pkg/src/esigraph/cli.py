"""Command-line front end: simulate, fit, benchmark, export-tree, metrics.

Every output file starts with a comment line embedding the resolved
config hash and master seed, and all runs are deterministic given the
config, so reruns produce bit-identical CSVs.  Exit codes: 0 success,
1 validation error, 2 I/O or data-file error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import figures, pipeline
from .config import (
    ALL_METHODS,
    ConfigError,
    ExperimentConfig,
    config_hash,
    config_text,
    load_config,
)
from .forward import load_matrix, save_matrix
from .mesh import save_mesh
from .metrics import evaluate
from .model import load_state, project_tree_pca, save_state
from .simulate import GroundTruth, simulate

RUN_COLUMNS = ("method", "snr_c_db", "snr_s_db", "seed", "df", "re", "le_mm", "auc")
AGG_COLUMNS = ("method", "snr_c_db", "snr_s_db", "df", "re", "le_mm", "auc")


def _fmt_cell(v: float) -> str:
    return "inf" if np.isinf(v) else f"{v:g}"


def cell_dirname(snr_c: float, snr_s: float, rep: int) -> str:
    return f"cell_c{_fmt_cell(snr_c)}_s{_fmt_cell(snr_s)}_r{rep}"


def _provenance(cfg: ExperimentConfig) -> str:
    return f"config={config_hash(cfg)} seed={cfg.seed}"


def save_truth(path, truth: GroundTruth, sim_cfg, comment: str) -> None:
    with open(path, "w") as fh:
        fh.write(f"# {comment}\n")
        fh.write(f"seed {sim_cfg.seed}\n")
        fh.write(f"snr_channel_db {sim_cfg.snr_channel_db!r}\n")
        fh.write(f"snr_source_db {sim_cfg.snr_source_db!r}\n")
        fh.write(f"states {truth.n_states}\n")
        fh.write("boundaries " + " ".join(str(b) for b in truth.state_boundaries) + "\n")
        for s in range(truth.n_states):
            for hemi, name in ((0, "left"), (1, "right")):
                verts = " ".join(str(v) for v in truth.active_vertices[s][hemi])
                fh.write(f"patch {s} {name} {truth.centers[s][hemi]} : {verts}\n")


def load_truth(path, S_true: np.ndarray):
    """Read a truth sidecar; returns (GroundTruth, seed, snr_c, snr_s)."""
    meta = {"seed": 0, "snr_channel_db": float("inf"), "snr_source_db": float("inf")}
    n_states = None
    boundaries: list[int] = []
    patches: dict[tuple[int, int], tuple[int, list[int]]] = {}
    with open(path) as fh:
        for no, raw in enumerate(fh, 1):
            ln = raw.strip()
            if not ln or ln.startswith("#"):
                continue
            toks = ln.split()
            try:
                if toks[0] == "seed":
                    meta["seed"] = int(toks[1])
                elif toks[0] in ("snr_channel_db", "snr_source_db"):
                    meta[toks[0]] = float(toks[1])
                elif toks[0] == "states":
                    n_states = int(toks[1])
                elif toks[0] == "boundaries":
                    boundaries = [int(t) for t in toks[1:]]
                elif toks[0] == "patch":
                    s, hemi = int(toks[1]), ("left", "right").index(toks[2])
                    center = int(toks[3])
                    verts = [int(t) for t in toks[toks.index(":") + 1:]]
                    patches[(s, hemi)] = (center, verts)
                else:
                    raise ValueError(f"unknown record {toks[0]!r}")
            except (IndexError, ValueError) as exc:
                raise ValueError(f"{path}:{no}: bad truth line {ln!r}: {exc}") from exc
    if n_states is None:
        raise ValueError(f"{path}: missing 'states' record")
    centers, actives = [], []
    for s in range(n_states):
        pair_c, pair_a = [], []
        for hemi in (0, 1):
            if (s, hemi) not in patches:
                raise ValueError(f"{path}: missing patch record for state {s}")
            center, verts = patches[(s, hemi)]
            pair_c.append(center)
            pair_a.append(np.array(verts, dtype=np.int64))
        centers.append(tuple(pair_c))
        actives.append(tuple(pair_a))
    truth = GroundTruth(
        S_true=S_true,
        active_vertices=actives,
        centers=centers,
        state_boundaries=np.array(boundaries, dtype=np.int64),
    )
    return truth, meta["seed"], meta["snr_channel_db"], meta["snr_source_db"]


def cmd_simulate(cfg: ExperimentConfig, out_dir) -> None:
    os.makedirs(out_dir, exist_ok=True)
    prov = _provenance(cfg)
    ws = pipeline.build_workspace(cfg)
    save_mesh(os.path.join(out_dir, "mesh.txt"), ws.mesh, prov)
    save_matrix(os.path.join(out_dir, "lead_field.txt"), ws.lead_raw.matrix, prov)
    with open(os.path.join(out_dir, "config.txt"), "w") as fh:
        fh.write(f"# {prov}\n")
        fh.write(config_text(cfg))
    for snr_c, snr_s, rep in pipeline.grid_cells(cfg):
        cell_dir = os.path.join(out_dir, cell_dirname(snr_c, snr_s, rep))
        os.makedirs(cell_dir, exist_ok=True)
        sim_cfg = pipeline.simulation_config(cfg, snr_c, snr_s, rep)
        X, truth = simulate(ws.mesh, ws.lead_raw, sim_cfg)
        save_matrix(os.path.join(cell_dir, "X.txt"), X, prov)
        save_matrix(os.path.join(cell_dir, "S_true.txt"), truth.S_true, prov)
        save_truth(os.path.join(cell_dir, "truth.txt"), truth, sim_cfg, prov)


def _load_instance(instance_dir):
    X = load_matrix(os.path.join(instance_dir, "X.txt"))
    S_true = load_matrix(os.path.join(instance_dir, "S_true.txt"))
    return X, load_truth(os.path.join(instance_dir, "truth.txt"), S_true)


def cmd_fit(cfg: ExperimentConfig, instance_dir, methods=None) -> None:
    prov = _provenance(cfg)
    ws = pipeline.build_workspace(cfg)
    X, (truth, seed, _, _) = _load_instance(instance_dir)
    for method in methods or cfg.methods:
        S_hat, state = pipeline.run_method(ws, cfg, method, X, seed)
        save_matrix(os.path.join(instance_dir, f"S_hat_{method}.txt"), S_hat, prov)
        if state is not None:
            state_dir = os.path.join(instance_dir, f"state_{method}")
            save_state(state_dir, state, prov)
            figures.render_objective_trace(
                state.objective_trace, os.path.join(state_dir, "trace.png")
            )


def _run_cell_task(args):
    cfg, key, snr_c, snr_s, rep, methods = args
    result = pipeline.run_cell(cfg, snr_c, snr_s, rep, methods=methods, workspace_key=key)
    rows = []
    for method in methods:
        rep_m = result.reports[method]
        rows.append(
            {
                "method": method,
                "snr_c_db": snr_c,
                "snr_s_db": snr_s,
                "seed": result.seed,
                "df": rep_m.df,
                "re": rep_m.re,
                "le_mm": rep_m.le_mean_mm,
                "auc": rep_m.auc,
            }
        )
    return rows


def _write_row(fh, columns, row):
    out = []
    for col in columns:
        v = row[col]
        out.append(repr(float(v)) if isinstance(v, float) else str(v))
    fh.write(",".join(out) + "\n")
    fh.flush()


def cmd_benchmark(cfg: ExperimentConfig, out_dir, jobs=None, methods=None) -> None:
    os.makedirs(out_dir, exist_ok=True)
    prov = _provenance(cfg)
    methods = tuple(methods or cfg.methods)
    jobs = jobs or cfg.jobs
    key = config_hash(cfg)
    cells = pipeline.grid_cells(cfg)
    tasks = [(cfg, key, c, s, r, methods) for c, s, r in cells]
    rows: list[dict] = []
    runs_path = os.path.join(out_dir, "benchmark_runs.csv")
    with open(runs_path, "w") as fh:
        fh.write(f"# {prov}\n")
        fh.write(",".join(RUN_COLUMNS) + "\n")
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as ex:
                for cell_rows in ex.map(_run_cell_task, tasks, chunksize=1):
                    for row in cell_rows:
                        rows.append(row)
                        _write_row(fh, RUN_COLUMNS, row)
        else:
            for task in tasks:
                for row in _run_cell_task(task):
                    rows.append(row)
                    _write_row(fh, RUN_COLUMNS, row)

    agg_rows = []
    for method in methods:
        for snr_c in cfg.grid_snr_channel_db:
            for snr_s in cfg.grid_snr_source_db:
                group = [
                    r for r in rows
                    if r["method"] == method
                    and r["snr_c_db"] == snr_c
                    and r["snr_s_db"] == snr_s
                ]
                if not group:
                    continue
                agg_rows.append(
                    {
                        "method": method,
                        "snr_c_db": snr_c,
                        "snr_s_db": snr_s,
                        "df": float(np.mean([r["df"] for r in group])),
                        "re": float(np.mean([r["re"] for r in group])),
                        "le_mm": float(np.mean([r["le_mm"] for r in group])),
                        "auc": float(np.mean([r["auc"] for r in group])),
                    }
                )
    summary_path = os.path.join(out_dir, "benchmark_summary.csv")
    with open(summary_path, "w") as fh:
        fh.write(f"# {prov}\n")
        fh.write(",".join(AGG_COLUMNS) + "\n")
        for row in agg_rows:
            _write_row(fh, AGG_COLUMNS, row)

    for snr_c in cfg.grid_snr_channel_db:
        for snr_s in cfg.grid_snr_source_db:
            figures.render_cell_boxplots(
                rows, snr_c, snr_s,
                os.path.join(out_dir, f"boxplot_c{_fmt_cell(snr_c)}_s{_fmt_cell(snr_s)}.png"),
            )
    figures.render_summary(agg_rows, os.path.join(out_dir, "benchmark_summary.png"))


def cmd_export_tree(state_dir, out_path, comment: str = "") -> None:
    state = load_state(state_dir)
    coords, edges = project_tree_pca(state.C, state.G, dims=3)
    with open(out_path, "w") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        fh.write("kind,a,b,x,y,z\n")
        for k in range(coords.shape[0]):
            fh.write(
                f"landmark,{k},,{float(coords[k, 0])!r},"
                f"{float(coords[k, 1])!r},{float(coords[k, 2])!r}\n"
            )
        for a, b in edges:
            fh.write(f"edge,{a},{b},,,\n")
    fig_path = os.path.splitext(out_path)[0] + ".png"
    figures.render_tree_projection(coords, edges, fig_path)


def cmd_metrics(cfg: ExperimentConfig, instance_dir, estimate_path, method: str, out_path=None) -> str:
    ws = pipeline.build_workspace(cfg)
    X, (truth, seed, snr_c, snr_s) = _load_instance(instance_dir)
    S_hat = load_matrix(estimate_path)
    report = evaluate(ws.mesh, X, ws.lead_raw.matrix, S_hat, truth)
    row = report.csv_row(method, snr_c, snr_s, seed)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(f"# {_provenance(cfg)}\n")
            fh.write(report.CSV_HEADER + "\n")
            fh.write(row + "\n")
    return row


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on bad usage, per the CLI contract
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="esigraph", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="experiment config file")
        p.add_argument("--seed", type=int, default=None, help="override the master seed")
        p.add_argument("--methods", default=None, help="comma-separated method subset")

    p_sim = sub.add_parser("simulate", help="write mesh, lead field, and all grid instances")
    add_common(p_sim)
    p_sim.add_argument("--out", required=True)

    p_fit = sub.add_parser("fit", help="run solvers on one simulated instance directory")
    add_common(p_fit)
    p_fit.add_argument("--instance", required=True)

    p_bench = sub.add_parser("benchmark", help="simulate + fit + evaluate the full grid")
    add_common(p_bench)
    p_bench.add_argument("--out", required=True)
    p_bench.add_argument("--jobs", type=int, default=None)

    p_tree = sub.add_parser("export-tree", help="project fitted landmarks to 3 PCs")
    p_tree.add_argument("--state", required=True, help="state directory written by fit")
    p_tree.add_argument("--out", required=True)

    p_met = sub.add_parser("metrics", help="evaluate a source estimate file")
    add_common(p_met)
    p_met.add_argument("--instance", required=True)
    p_met.add_argument("--estimate", required=True)
    p_met.add_argument("--method", default="external", help="method label for the CSV row")
    p_met.add_argument("--out", default=None)
    return parser


def _resolve(args) -> tuple[ExperimentConfig, tuple | None]:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    methods = None
    if args.methods:
        methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
        for m in methods:
            if m not in ALL_METHODS:
                raise ConfigError(f"--methods: unknown method {m!r}; expected one of {ALL_METHODS}")
    return cfg, methods


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "simulate":
            cfg, _ = _resolve(args)
            cmd_simulate(cfg, args.out)
        elif args.command == "fit":
            cfg, methods = _resolve(args)
            cmd_fit(cfg, args.instance, methods)
        elif args.command == "benchmark":
            cfg, methods = _resolve(args)
            cmd_benchmark(cfg, args.out, jobs=args.jobs, methods=methods)
        elif args.command == "export-tree":
            cmd_export_tree(args.state, args.out)
        elif args.command == "metrics":
            cfg, _ = _resolve(args)
            row = cmd_metrics(cfg, args.instance, args.estimate, args.method, args.out)
            print(row)
    except ConfigError as exc:
        print(f"esigraph: validation error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"esigraph: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"esigraph: I/O error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"esigraph: data error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
