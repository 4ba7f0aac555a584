"""Benchmark task construction and the training pipeline.

Synthetic tasks build a full reference set of landscape mutants, carve out a
limited training subset with the percentile/mutation-gap difficulty filter,
and hand back everything the samplers and the evaluation harness need. CSV
tasks load externally provided data in the same structure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, FitnessNormalizer, difficulty_filter, load_csv
from .flow import FlowModel, FlowTrainConfig, train_flow
from .landscape import (SyntheticLandscape, make_edit_pool, make_landscape,
                        synthetic_full_dataset)
from .predictor import (PredictorConfig, PredictorModel, smooth_labels_knn,
                        train_oracle, train_predictor)
from .seqs import Vocabulary
from .vae import VaeConfig, VaeModel, train_vae


@dataclass(frozen=True)
class SyntheticTaskSpec:
    name: str
    percentile: object            # (low, high) band or scalar upper bound
    gap: int
    length: int = 20
    full_size: int = 20000
    max_train: int = 2500
    edits_per_position: int = 3
    min_mutations: int = 1
    max_mutations: int = 12
    n_pairs: int | None = None    # defaults to 2 * length inside the builder


SYNTHETIC_TASKS = {
    "synthetic-medium": SyntheticTaskSpec("synthetic-medium", percentile=(20, 40), gap=6),
    "synthetic-hard": SyntheticTaskSpec("synthetic-hard", percentile=30, gap=7),
}


@dataclass
class TaskData:
    name: str
    vocab: Vocabulary
    full: Dataset
    train: Dataset
    landscape: SyntheticLandscape | None = None
    edit_pool: np.ndarray | None = None

    @property
    def normalizer(self) -> FitnessNormalizer:
        return self.full.normalizer()


def build_synthetic_task(name: str, seed: int,
                         spec: SyntheticTaskSpec | None = None) -> TaskData:
    """Deterministically construct a synthetic task from its seed."""
    if spec is None:
        if name not in SYNTHETIC_TASKS:
            raise ValueError(f"unknown synthetic task {name!r}; "
                             f"choose from {sorted(SYNTHETIC_TASKS)}")
        spec = SYNTHETIC_TASKS[name]
    vocab = Vocabulary.amino_acids()
    base = make_landscape(seed, spec.length, vocab, n_pairs=spec.n_pairs)
    pool = make_edit_pool(seed + 1, base.target, vocab, spec.edits_per_position)
    landscape = make_landscape(seed, spec.length, vocab, n_pairs=spec.n_pairs,
                               decoy_tokens=pool, target=base.target)
    full = synthetic_full_dataset(landscape, spec.full_size, seed + 2, vocab,
                                  edit_tokens=pool,
                                  min_mutations=spec.min_mutations,
                                  max_mutations=spec.max_mutations)
    train = difficulty_filter(full, spec.percentile, spec.gap)
    if train.n > spec.max_train:
        keep = np.random.default_rng(seed + 3).choice(train.n, size=spec.max_train,
                                                      replace=False)
        train = train.subset(np.sort(keep))
    return TaskData(name=name, vocab=vocab, full=full, train=train,
                    landscape=landscape, edit_pool=pool)


def build_csv_task(path, vocab: Vocabulary | None = None, range_file=None,
                   name: str = "csv") -> TaskData:
    """Wrap an externally provided sequence,fitness CSV as a task. The loaded
    file is treated as the (already filtered) training set; its declared range
    must describe the full reference set."""
    vocab = vocab or Vocabulary.amino_acids()
    train = load_csv(path, vocab, range_file=range_file)
    return TaskData(name=name, vocab=vocab, full=train, train=train)


def split_train_val(data: Dataset, seed: int, val_fraction: float = 0.1):
    """Deterministic (fit, val) split; val is None when val_fraction == 0."""
    if not (0 <= val_fraction < 1):
        raise ValueError("val_fraction must lie in [0, 1)")
    if val_fraction == 0:
        return data, None
    rng = np.random.default_rng(seed + 10)
    n_val = max(1, int(round(val_fraction * data.n)))
    perm = rng.permutation(data.n)
    return data.subset(perm[n_val:]), data.subset(perm[:n_val])


def encode_latents(vae: VaeModel, data: Dataset, seed: int) -> np.ndarray:
    """One sampled posterior draw per record (z = mean + sigma * eps)."""
    rng = np.random.default_rng(seed)
    out = np.empty((data.n, vae.latent_dim))
    for start in range(0, data.n, 512):
        seqs = data.sequences[start:start + 512]
        mean, logvar = vae.encode_batch(seqs)
        eps = rng.standard_normal(mean.shape)
        out[start:start + len(seqs)] = mean + np.exp(0.5 * logvar) * eps
    return out


@dataclass
class ModelBundle:
    vae: VaeModel
    flow: FlowModel
    predictor: PredictorModel
    flow_conditional: FlowModel | None = None
    smoothed_predictor: PredictorModel | None = None
    reports: dict = field(default_factory=dict)


def default_vae_config(latent_dim: int = 14) -> VaeConfig:
    return VaeConfig(latent_dim=latent_dim, beta=0.0015, learning_rate=1e-3,
                     epochs=90, batch_size=128, hidden_channels=48)


def default_flow_config(seed: int = 0) -> FlowTrainConfig:
    return FlowTrainConfig(learning_rate=1e-3, batch_size=256, epochs=300, seed=seed)


def default_predictor_config() -> PredictorConfig:
    return PredictorConfig(learning_rate=1e-3, epochs=100, batch_size=128,
                           hidden_channels=24, hidden_dense=64)


def train_models(task: TaskData, seed: int,
                 vae_cfg: VaeConfig | None = None,
                 flow_cfg: FlowTrainConfig | None = None,
                 pred_cfg: PredictorConfig | None = None,
                 conditional: bool = False,
                 smoothed: bool = False,
                 val_fraction: float = 0.1) -> ModelBundle:
    """Train the whole stack on the task's limited training set: VAE first,
    then the flow prior on its sampled latents, plus the fitness predictor.
    `conditional` adds a fitness-conditioned flow; `smoothed` adds a predictor
    trained on k-NN smoothed labels."""
    vae_cfg = vae_cfg or default_vae_config()
    flow_cfg = flow_cfg or default_flow_config(seed)
    pred_cfg = pred_cfg or default_predictor_config()
    data = task.train
    fit, val = split_train_val(data, seed, val_fraction)

    vae, vae_report = train_vae(fit, vae_cfg, seed, vocab_size=task.vocab.size,
                                val_data=val)
    latents = encode_latents(vae, data, seed + 20)
    flow, flow_losses = train_flow(latents, flow_cfg)
    predictor, pred_report = train_predictor(fit, pred_cfg, seed,
                                             vocab_size=task.vocab.size,
                                             val_data=val)
    bundle = ModelBundle(vae=vae, flow=flow, predictor=predictor,
                         reports={"vae": vae_report.to_json(),
                                  "flow": {"per_epoch": flow_losses},
                                  "predictor": pred_report.to_json()})
    if conditional:
        labels = data.normalized_fitness()
        cond_cfg = FlowTrainConfig(learning_rate=flow_cfg.learning_rate,
                                   batch_size=flow_cfg.batch_size,
                                   epochs=flow_cfg.epochs, seed=flow_cfg.seed + 1)
        bundle.flow_conditional, cond_losses = train_flow(
            latents, cond_cfg, labels=labels, conditional=True)
        bundle.reports["flow_conditional"] = {"per_epoch": cond_losses}
    if smoothed:
        sm_data = smooth_labels_knn(fit, k=10)
        bundle.smoothed_predictor, sm_report = train_predictor(
            sm_data, pred_cfg, seed + 30, vocab_size=task.vocab.size,
            role="smoothed", val_data=val)
        bundle.reports["smoothed_predictor"] = sm_report.to_json()
    return bundle


def task_oracle(task: TaskData, cfg: PredictorConfig | None = None, seed: int = 0):
    """Exact landscape oracle for synthetic tasks; trained on the full set
    otherwise."""
    if task.landscape is not None:
        return train_oracle(task.landscape)
    return train_oracle(task.full, cfg, seed, vocab_size=task.vocab.size)
