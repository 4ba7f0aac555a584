"""Multi-seed benchmark runner, parameter grids, fitness-extrapolation sweep,
ODE-steps sweep, and the ablation table, with machine-readable result files.

Results land in <results>/<task>/<experiment>/<timestamp>/ as summary.json
plus cells.csv (for grids/sweeps) and samples/*.json; every file embeds the
config echo and model checksums so runs are replayable. Job execution goes
through a small work queue whose assembly is keyed, so completion order never
affects output.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import Dataset, FitnessNormalizer
from .errors import ConfigError
from .flow import FlowModel
from .metrics import MetricReport, compute_metrics, median_normalized_fitness
from .predictor import PredictorModel
from .sampling import SamplerConfig, guided_sample
from .seqs import Vocabulary
from .vae import VaeModel

METRIC_NAMES = ("median_fitness", "diversity", "novelty")


@dataclass
class TaskAssets:
    """Everything a sampling experiment needs: frozen models plus the oracle
    and the full-set normalizer."""

    name: str
    vocab: Vocabulary
    train: Dataset
    normalizer: FitnessNormalizer
    oracle: object                      # exposes predict_sequences(seqs) -> raw fitness
    vae: VaeModel
    flow: FlowModel
    predictor: PredictorModel
    flow_conditional: FlowModel | None = None

    def __post_init__(self):
        problems = []
        if self.vae.latent_dim != self.flow.latent_dim:
            problems.append(f"latent dim mismatch: vae {self.vae.latent_dim} "
                            f"vs flow {self.flow.latent_dim}")
        if self.predictor.length != self.vae.length:
            problems.append(f"length mismatch: predictor {self.predictor.length} "
                            f"vs vae {self.vae.length}")
        if self.flow_conditional is not None and \
                self.flow_conditional.latent_dim != self.vae.latent_dim:
            problems.append("conditional flow latent dim mismatch")
        if problems:
            raise ConfigError(problems)

    def flow_for(self, mode: str) -> FlowModel:
        if mode == "learned_posterior":
            if self.flow_conditional is None:
                raise ConfigError(["learned_posterior mode needs a conditional flow checkpoint"])
            return self.flow_conditional
        return self.flow


@dataclass
class BenchmarkSummary:
    reports: list[MetricReport]
    mean: dict[str, float]
    std: dict[str, float]
    config: dict

    def to_json(self) -> dict:
        return {"per_seed": [r.to_json() for r in self.reports],
                "mean": self.mean, "std": self.std, "config": self.config}

    def format_row(self) -> str:
        """One table row in the usual 'metric mean +- std' layout."""
        cells = [f"{self.mean[m]:.2f} +- {self.std[m]:.2f}" for m in METRIC_NAMES]
        return " | ".join(cells)


def run_jobs(jobs: dict, parallelism: int = 1) -> dict:
    """Execute {key: zero-arg callable} and return {key: result}; assembly is
    by key, independent of completion order."""
    if parallelism <= 1:
        return {key: fn() for key, fn in jobs.items()}
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        futures = {key: pool.submit(fn) for key, fn in jobs.items()}
        return {key: fut.result() for key, fut in futures.items()}


def _sample_for_seed(assets: TaskAssets, cfg: SamplerConfig, seed: int):
    return guided_sample(replace(cfg, seed=seed), assets.flow_for(cfg.mode),
                         assets.vae, assets.predictor)


def run_benchmark(assets: TaskAssets, cfg: SamplerConfig, seeds,
                  parallelism: int = 1, keep_samples: bool = False):
    """Sample once per seed with frozen models and aggregate the three metrics
    as mean and population std over seeds. Unconditional runs keep the whole
    deduplicated batch (no top-k cut), matching prior-only analysis."""
    seeds = list(seeds)
    if cfg.mode == "unconditional" and cfg.top_k != cfg.batch:
        cfg = replace(cfg, top_k=cfg.batch)
    jobs = {s: (lambda s=s: _sample_for_seed(assets, cfg, s)) for s in seeds}
    results = run_jobs(jobs, parallelism)
    reports = []
    for s in seeds:
        res = results[s]
        reports.append(compute_metrics(res.sequences, assets.oracle,
                                       assets.normalizer, assets.train, seed=s))
    summary = BenchmarkSummary(
        reports=reports,
        mean={m: float(np.mean([getattr(r, m) for r in reports])) for m in METRIC_NAMES},
        std={m: float(np.std([getattr(r, m) for r in reports])) for m in METRIC_NAMES},
        config={"sampler": dataclasses.asdict(cfg), "seeds": seeds, "task": assets.name},
    )
    return (summary, results) if keep_samples else summary


def grid_search(assets: TaskAssets, base_cfg: SamplerConfig, alphas, guidance_steps,
                seed: int | None = None, parallelism: int = 1) -> list[dict]:
    """One sampling run per (alpha, J) cell, reporting fitness and diversity
    (plus novelty) per cell. Cell failures are recorded, not fatal."""
    alphas = list(alphas)
    guidance_steps = list(guidance_steps)
    if not alphas or not guidance_steps:
        raise ValueError("grids must be non-empty")
    seed = base_cfg.seed if seed is None else seed

    def run_cell(alpha, j):
        mode = base_cfg.mode
        if alpha == 0 and j == 0 and mode == "unconditional":
            cfg = replace(base_cfg, alpha=0.0, guidance_steps=0, seed=seed)
        else:
            cfg = replace(base_cfg, alpha=float(alpha), guidance_steps=int(j), seed=seed)
        res = guided_sample(cfg, assets.flow_for(cfg.mode), assets.vae, assets.predictor)
        report = compute_metrics(res.sequences, assets.oracle, assets.normalizer,
                                 assets.train, seed=seed)
        return {"alpha": float(alpha), "guidance_steps": int(j),
                "median_fitness": report.median_fitness,
                "diversity": report.diversity, "novelty": report.novelty,
                "n_unique": report.n_sequences, "error": ""}

    cells = []
    for alpha in alphas:
        for j in guidance_steps:
            try:
                cells.append(run_cell(alpha, j))
            except (ConfigError, FloatingPointError, ValueError) as exc:
                cells.append({"alpha": float(alpha), "guidance_steps": int(j),
                              "median_fitness": np.nan, "diversity": np.nan,
                              "novelty": np.nan, "n_unique": 0, "error": str(exc)})
    return cells


def extrapolation_experiment(assets: TaskAssets, y_values, modes=("manifold", "learned_posterior"),
                             base_cfg: SamplerConfig | None = None,
                             seed: int = 0) -> list[dict]:
    """Median oracle fitness of the *raw* decoded batch (no dedup, no top-k)
    as the requested target fitness varies, per sampling mode."""
    if base_cfg is None:
        base_cfg = SamplerConfig(steps=32, guidance_steps=5, alpha=0.5, batch=256,
                                 top_k=256, mode="manifold", seed=seed)
    rows = []
    for mode in modes:
        for y in y_values:
            if mode in ("unconditional", "learned_posterior"):
                cfg = replace(base_cfg, mode=mode, alpha=0.0, guidance_steps=0,
                              target_y=float(y), seed=seed)
            else:
                cfg = replace(base_cfg, mode=mode, target_y=float(y), seed=seed)
            res = guided_sample(cfg, assets.flow_for(mode), assets.vae, assets.predictor)
            measured = median_normalized_fitness(res.raw_sequences, assets.oracle,
                                                 assets.normalizer)
            rows.append({"mode": mode, "target_y": float(y), "median_y_gt": measured})
    return rows


def ode_steps_sweep(assets: TaskAssets, base_cfg: SamplerConfig, step_counts,
                    seed: int | None = None) -> list[dict]:
    """One run per ODE step count, reporting fitness and diversity."""
    seed = base_cfg.seed if seed is None else seed
    rows = []
    for k in step_counts:
        if k < 1:
            raise ValueError("step counts must be >= 1")
        cfg = replace(base_cfg, steps=int(k), seed=seed)
        res = guided_sample(cfg, assets.flow_for(cfg.mode), assets.vae, assets.predictor)
        report = compute_metrics(res.sequences, assets.oracle, assets.normalizer,
                                 assets.train, seed=seed)
        rows.append({"steps": int(k), "median_fitness": report.median_fitness,
                     "diversity": report.diversity})
    return rows


def ablation_table(assets: TaskAssets, base_cfg: SamplerConfig, seeds,
                   modes=("manifold", "naive", "learned_posterior"),
                   parallelism: int = 1) -> list[dict]:
    """Seed-matched mode comparison shaped like the guidance-variant tables."""
    rows = []
    for mode in modes:
        if mode in ("unconditional", "learned_posterior"):
            cfg = replace(base_cfg, mode=mode, alpha=0.0, guidance_steps=0)
        else:
            cfg = replace(base_cfg, mode=mode)
        summary = run_benchmark(assets, cfg, seeds, parallelism=parallelism)
        rows.append({"mode": mode,
                     "median_fitness_mean": summary.mean["median_fitness"],
                     "median_fitness_std": summary.std["median_fitness"],
                     "diversity_mean": summary.mean["diversity"],
                     "novelty_mean": summary.mean["novelty"]})
    return rows


# --- results directory layout ---

def results_dir(root, task: str, experiment: str, timestamp: str | None = None) -> Path:
    stamp = timestamp or time.strftime("%Y%m%d-%H%M%S")
    path = Path(root) / task / experiment / stamp
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_summary(path: Path, payload: dict) -> Path:
    out = Path(path) / "summary.json"
    out.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_jsonify))
    return out


def write_cells_csv(path: Path, rows: list[dict]) -> Path:
    out = Path(path) / "cells.csv"
    if rows:
        with out.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
    else:
        out.write_text("")
    return out


def write_samples(path: Path, results: dict, vocab: Vocabulary) -> list[Path]:
    sample_dir = Path(path) / "samples"
    sample_dir.mkdir(exist_ok=True)
    written = []
    for key, res in sorted(results.items(), key=lambda kv: str(kv[0])):
        out = sample_dir / f"seed-{key}.json"
        out.write_text(json.dumps(res.to_json(vocab), indent=2, sort_keys=True))
        written.append(out)
    return written


def _jsonify(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")
