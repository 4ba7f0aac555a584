"""Scalar fitness models: trainable predictors over relaxed one-hot input,
an exact landscape-backed oracle for synthetic mode, checkpoint plug-in for
externally trained weights, and a simple k-NN label smoother.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import TrainingDivergedError
from .landscape import SyntheticLandscape
from .nn import autodiff as ad
from .nn.autodiff import Tensor
from .nn.checkpoint import load_checkpoint, save_checkpoint
from .nn.layers import Network, NonFiniteError
from .nn.optim import AdamConfig, AdamState, adam_step
from .seqs import levenshtein_one_to_many, one_hot_batch

ROLES = ("predictor", "smoothed", "oracle")


@dataclass(frozen=True)
class PredictorConfig:
    learning_rate: float = 1e-3
    epochs: int = 60
    batch_size: int = 128
    hidden_channels: int = 24
    hidden_dense: int = 64

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError("bad training hyperparameters")


@dataclass
class PredictorTrainReport:
    per_epoch_mse: list[float] = field(default_factory=list)
    final_train_mse: float | None = None
    val_mse: float | None = None

    def to_json(self) -> dict:
        return {"per_epoch_mse": self.per_epoch_mse,
                "final_train_mse": self.final_train_mse, "val_mse": self.val_mse}


def predictor_descriptor(length: int, vocab_size: int, cfg: PredictorConfig) -> list[dict]:
    h = cfg.hidden_channels
    return [
        {"kind": "conv1d", "in_ch": vocab_size, "out_ch": h, "kernel": 5},
        {"kind": "relu"},
        {"kind": "conv1d", "in_ch": h, "out_ch": h, "kernel": 5},
        {"kind": "relu"},
        {"kind": "flatten"},
        {"kind": "dense", "in": h * length, "out": cfg.hidden_dense},
        {"kind": "relu"},
        {"kind": "dense", "in": cfg.hidden_dense, "out": 1},
    ]


class PredictorModel:
    """CNN regressor from a (d, |V|) relaxed one-hot matrix to a scalar."""

    def __init__(self, net: Network, length: int, vocab_size: int, role: str):
        if role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}")
        self.net = net
        self.length = length
        self.vocab_size = vocab_size
        self.role = role

    @classmethod
    def build(cls, length: int, vocab_size: int, cfg: PredictorConfig, seed: int,
              role: str = "predictor") -> "PredictorModel":
        return cls(Network.build(predictor_descriptor(length, vocab_size, cfg), seed),
                   length, vocab_size, role)

    def _validate(self, x: np.ndarray) -> np.ndarray:
        """Normalize to a (B, d, V) batch; reject bad shapes and row sums."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 2:
            x = x[None]
        if x.ndim != 3 or x.shape[1] != self.length or x.shape[2] != self.vocab_size:
            raise ValueError(f"expected (batch, {self.length}, {self.vocab_size}) input, "
                             f"got {x.shape}")
        if np.abs(x.sum(axis=-1) - 1.0).max() > 1e-6:
            raise ValueError("rows of a relaxed one-hot input must sum to 1 (+-1e-6)")
        return x

    def predict_tape(self, probs: Tensor) -> Tensor:
        """(B, d, V) relaxed one-hot -> (B,) scores, on the tape."""
        x = ad.transpose(probs, (0, 2, 1))
        out = self.net.apply(x)
        return ad.reshape(out, (out.shape[0],))

    def predict(self, x: np.ndarray):
        """Score a (d, V) matrix (returns float) or a (B, d, V) batch."""
        single = np.asarray(x).ndim == 2
        scores = self.predict_tape(Tensor(self._validate(x))).data
        return float(scores[0]) if single else scores

    def predict_sequences(self, seqs: np.ndarray) -> np.ndarray:
        """Score token sequences via their hard one-hot encoding."""
        seqs = np.atleast_2d(np.asarray(seqs, dtype=np.int64))
        return self.predict(one_hot_batch(seqs, self.vocab_size))

    def input_gradient(self, x: np.ndarray) -> np.ndarray:
        """d(score)/d(input); single (d, V) in, single (d, V) gradient out."""
        single = np.asarray(x).ndim == 2
        self.net.refresh()
        xt = Tensor(self._validate(x))
        out = self.predict_tape(xt)
        out.backward(np.ones_like(out.data))
        return xt.grad[0] if single else xt.grad


def predict_fitness(model: PredictorModel, relaxed_one_hot: np.ndarray) -> float:
    """Scalar fitness of one relaxed one-hot sequence matrix."""
    return model.predict(relaxed_one_hot)


def train_predictor(data: Dataset, cfg: PredictorConfig, seed: int,
                    vocab_size: int = 20, role: str = "predictor",
                    val_data: Dataset | None = None, raw_labels: bool = False
                    ) -> tuple[PredictorModel, PredictorTrainReport]:
    """Minimize MSE against normalized fitness (raw fitness for oracle
    training, see `raw_labels`); deterministic given the seed."""
    model = PredictorModel.build(data.length, vocab_size, cfg, seed, role)
    labels = data.fitness if raw_labels else data.normalized_fitness()
    rng = np.random.default_rng(seed + 2000)
    opt_cfg = AdamConfig(learning_rate=cfg.learning_rate)
    opt_state = AdamState()
    report = PredictorTrainReport()
    for epoch in range(cfg.epochs):
        order = rng.permutation(data.n)
        sq_sum, count = 0.0, 0
        for start in range(0, data.n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            x = one_hot_batch(data.sequences[idx], vocab_size)
            y = labels[idx]
            model.net.refresh()
            try:
                pred = model.predict_tape(Tensor(x))
            except NonFiniteError as exc:
                raise TrainingDivergedError(f"epoch {epoch}: {exc}") from None
            resid = pred - Tensor(y)
            loss = ad.tmean(resid * resid)
            if not np.isfinite(loss.data):
                raise TrainingDivergedError(f"epoch {epoch}: non-finite loss")
            loss.backward()
            adam_step(model.net.params, model.net.collect_grads(), opt_cfg, opt_state)
            sq_sum += float(loss.data) * idx.size
            count += idx.size
        report.per_epoch_mse.append(sq_sum / count)
    model.net.refresh()
    report.final_train_mse = _mse(model, data, labels)
    if val_data is not None:
        val_labels = val_data.fitness if raw_labels else val_data.normalized_fitness()
        report.val_mse = _mse(model, val_data, val_labels)
    return model, report


def _mse(model: PredictorModel, data: Dataset, labels: np.ndarray) -> float:
    preds = np.concatenate([model.predict_sequences(data.sequences[s:s + 512])
                            for s in range(0, data.n, 512)])
    return float(np.mean((preds - labels) ** 2))


class LandscapeOracle:
    """Exact oracle for synthetic mode: wraps the analytic landscape, raw scale."""

    role = "oracle"

    def __init__(self, landscape: SyntheticLandscape):
        self.landscape = landscape
        self.length = landscape.length

    def predict_sequences(self, seqs: np.ndarray) -> np.ndarray:
        return self.landscape.fitness_many(seqs)


def train_oracle(source, cfg: PredictorConfig | None = None, seed: int = 0,
                 vocab_size: int = 20):
    """Evaluation oracle. A SyntheticLandscape is wrapped exactly (no training);
    a Dataset (the full reference set) trains a net on raw fitness labels."""
    if isinstance(source, SyntheticLandscape):
        return LandscapeOracle(source)
    if isinstance(source, Dataset):
        if cfg is None:
            cfg = PredictorConfig()
        model, _ = train_predictor(source, cfg, seed, vocab_size=vocab_size,
                                   role="oracle", raw_labels=True)
        return model
    raise TypeError("source must be a SyntheticLandscape or a Dataset")


def save_predictor(model: PredictorModel, path) -> str:
    return save_checkpoint(path, "predictor", model.net.descriptor, model.net.params,
                           extra={"role": model.role, "length": model.length,
                                  "vocab_size": model.vocab_size})


def load_external_predictor(path) -> PredictorModel:
    """Load a frozen predictor checkpoint (checksum-verified); role and shape
    come from the stored metadata."""
    kind, descriptor, params, extra, _ = load_checkpoint(path)
    if kind != "predictor":
        raise ValueError(f"checkpoint kind {kind!r} is not a predictor")
    net = Network(descriptor, params)
    return PredictorModel(net, int(extra["length"]), int(extra["vocab_size"]),
                          extra.get("role", "predictor"))


def smooth_labels_knn(data: Dataset, k: int = 10) -> Dataset:
    """Replace each label by the mean of itself and its k nearest neighbors
    (edit distance). A lightweight smoothing stand-in, NOT the graph-diffusion
    procedure externally trained smoothed predictors come from."""
    if not (1 <= k < data.n):
        raise ValueError("need 1 <= k < n")
    smoothed = np.empty(data.n)
    for i in range(data.n):
        dists = levenshtein_one_to_many(data.sequences[i], data.sequences)
        dists[i] = np.iinfo(np.int64).max
        nn = np.argpartition(dists, k)[:k]
        smoothed[i] = (data.fitness[i] + data.fitness[nn].sum()) / (k + 1)
    return Dataset(data.sequences.copy(), smoothed, data.y_min, data.y_max)
