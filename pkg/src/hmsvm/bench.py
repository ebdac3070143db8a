"""Experiment harness: instance grids, per-instance reports, aggregation.

Runs the solver over a grid of synthetic families (or explicit files),
writes one JSON report per run plus a CSV summary aggregated by sample
count and by feature count, with an optional paired no-cuts ablation.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from itertools import product
from pathlib import Path

from .core import Dataset, SolveReport, SolverConfig, Status
from .bnb import solve
from .data import SyntheticSpec, generate_synthetic, load_csv, load_libsvm

REPORT_KEYS = (
    "instance", "n", "m", "C", "status", "objective", "lower_bound",
    "gap_percent", "cuts_generated", "nodes_explored", "time", "seed",
    "config",
)


@dataclass(frozen=True)
class BenchSpec:
    """One benchmark campaign: instances x penalty grid x budgets."""

    families: tuple[str, ...] = ()
    ns: tuple[int, ...] = ()
    ms: tuple[int, ...] = ()
    replicates: int = 1
    c_grid: tuple[float, ...] = ()
    time_limit: float = 600.0
    sampling_budget: float = 30.0
    full_cut_budget: float = 30.0
    seed: int = 0
    out_dir: Path = Path("bench-out")
    ablation: bool = False
    data_paths: tuple[Path, ...] = ()
    outlier_fraction: float = 0.1

    def __post_init__(self):
        if not self.c_grid:
            raise ValueError("the C grid must not be empty")
        synthetic = self.families and self.ns and self.ms and self.replicates
        if not synthetic and not self.data_paths:
            raise ValueError("no instances: give a synthetic grid or files")


def report_to_dict(
    dataset: Dataset, report: SolveReport, cfg: SolverConfig,
    extra_config: dict | None = None,
) -> dict:
    """Flatten one solve into the documented wire format."""
    elapsed = dict(report.elapsed_seconds)
    config = {
        "C": cfg.C,
        "time_limit": cfg.time_limit,
        "sampling_budget": cfg.sampling_budget,
        "full_cut_budget": cfg.full_cut_budget,
        "feas_tol": cfg.feas_tol,
        "opt_tol": cfg.opt_tol,
        "seed": cfg.seed,
        "big_m_policy": cfg.big_m_policy,
        "sample_size_cap": cfg.sample_size_cap,
        "use_cuts": cfg.use_cuts,
        "tight_weight_box": cfg.tight_weight_box,
    }
    if extra_config:
        config.update(extra_config)
    return {
        "instance": dataset.name,
        "n": dataset.n,
        "m": dataset.m,
        "C": cfg.C,
        "status": report.status.value,
        "objective": report.upper_bound,
        "lower_bound": report.lower_bound,
        "gap_percent": report.gap_percent,
        "cuts_generated": report.cuts_generated,
        "nodes_explored": report.nodes_explored,
        "time": {
            "step1": elapsed.get("step1", 0.0),
            "step2": elapsed.get("step2", 0.0),
            "step3": elapsed.get("step3", 0.0),
            "total": elapsed.get("total", 0.0),
        },
        "seed": cfg.seed,
        "config": config,
    }


def write_report(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def load_instance(path: Path, fmt: str = "auto") -> Dataset:
    if fmt == "auto":
        fmt = "libsvm" if path.suffix in (".libsvm", ".svm", ".txt") else "csv"
    return load_libsvm(path) if fmt == "libsvm" else load_csv(path)


def _iter_instances(spec: BenchSpec):
    for path in spec.data_paths:
        yield load_instance(Path(path)), {"family": None, "rep": None}
    if spec.families and spec.ns and spec.ms:
        for family, n, m, rep in product(
            spec.families, spec.ns, spec.ms, range(spec.replicates)
        ):
            synth = SyntheticSpec(
                n=n, m=m, family=family,
                outlier_fraction=spec.outlier_fraction,
                seed=spec.seed + rep,
            )
            yield generate_synthetic(synth), {"family": family, "rep": rep}


def run_bench(spec: BenchSpec) -> list[dict]:
    """Execute the campaign; returns the per-run payloads it wrote."""
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for dataset, meta in _iter_instances(spec):
        for C in spec.c_grid:
            variants = [True, False] if spec.ablation else [True]
            for use_cuts in variants:
                cfg = SolverConfig(
                    C=C,
                    time_limit=spec.time_limit,
                    sampling_budget=spec.sampling_budget if use_cuts else 0.0,
                    full_cut_budget=spec.full_cut_budget if use_cuts else 0.0,
                    seed=spec.seed + (meta["rep"] or 0),
                    use_cuts=use_cuts,
                )
                tag = "" if use_cuts else "_nocuts"
                name = f"{dataset.name}_C{C:g}{tag}"
                try:
                    report = solve(dataset, cfg)
                    payload = report_to_dict(dataset, report, cfg)
                except Exception as exc:  # record, keep the campaign going
                    payload = {
                        "instance": dataset.name, "n": dataset.n,
                        "m": dataset.m, "C": C, "status": Status.ERROR.value,
                        "error": str(exc),
                    }
                payload["_meta"] = {
                    "family": meta["family"], "use_cuts": use_cuts,
                }
                write_report(out / f"{name}.json", payload)
                rows.append(payload)
                print(
                    f"{name}: {payload['status']}"
                    + (
                        f" objective={payload['objective']:.6g}"
                        f" gap={payload['gap_percent']:.4f}%"
                        f" time={payload['time']['total']:.1f}s"
                        if "objective" in payload else ""
                    ),
                    flush=True,
                )
    summarize(rows, out / "summary.csv", ablation=spec.ablation)
    return rows


def _aggregate(group_rows):
    n_opts = sum(1 for r in group_rows if r["status"] == "Optimal")
    gaps = [r.get("gap_percent", 100.0) for r in group_rows]
    times = [r.get("time", {}).get("total", 0.0) for r in group_rows]
    avg = lambda xs: sum(xs) / len(xs) if xs else 0.0
    return n_opts, avg(gaps), avg(times)


def summarize(rows: list[dict], csv_path, ablation: bool = False) -> list[str]:
    """Aggregate by sample count and by feature count; write the CSV."""
    def groups_for(row):
        fam = (row.get("_meta") or {}).get("family")
        prefix = f"type{fam}:" if fam else ""
        return [f"{prefix}n={row['n']}", f"{prefix}m={row['m']}"]

    cuts_rows = [r for r in rows if (r.get("_meta") or {}).get("use_cuts", True)]
    nocut_rows = [r for r in rows if not (r.get("_meta") or {}).get("use_cuts", True)]
    labels = []
    for r in cuts_rows:
        for g in groups_for(r):
            if g not in labels:
                labels.append(g)

    header = "group,n_opts,avg_gap_percent,avg_time_seconds"
    if ablation:
        header += ",n_opts_nocuts,avg_gap_percent_nocuts,avg_time_seconds_nocuts"
    lines = [header]
    for label in labels:
        rows_in = [r for r in cuts_rows if label in groups_for(r)]
        n_opts, gap, secs = _aggregate(rows_in)
        line = f"{label},{n_opts},{gap:.6g},{secs:.6g}"
        if ablation:
            alt = [r for r in nocut_rows if label in groups_for(r)]
            n2, g2, s2 = _aggregate(alt)
            line += f",{n2},{g2:.6g},{s2:.6g}"
        lines.append(line)
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return lines
