"""Beta-weighted variational autoencoder over fixed-length token sequences.

Encoder: one-hot input -> conv stack -> dense head emitting mean and bounded
log-variance. Decoder: dense -> conv stack -> per-position logits. Tokens come
out of the logits via per-row argmax; during guided sampling the decoder is
instead relaxed with a softmax so predictors can be differentiated through it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import TrainingDivergedError
from .nn import autodiff as ad
from .nn.autodiff import Tensor
from .nn.layers import Network, NonFiniteError, ParamStore
from .nn.optim import AdamConfig, AdamState, adam_step
from .seqs import one_hot_batch

LOGVAR_BOUND = 10.0  # |log-variance| cap, applied smoothly via tanh


@dataclass(frozen=True)
class VaeConfig:
    latent_dim: int
    beta: float
    learning_rate: float = 1e-3
    epochs: int = 40
    batch_size: int = 128
    hidden_channels: int = 32

    def __post_init__(self):
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be >= 1")
        if self.beta <= 0:
            raise ValueError("beta must be > 0")
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError("bad training hyperparameters")


@dataclass(frozen=True)
class EncoderOutput:
    mean: np.ndarray
    log_variance: np.ndarray


@dataclass
class TrainReport:
    per_epoch: list[dict] = field(default_factory=list)
    final_accuracy: float | None = None
    val_accuracy: float | None = None

    def to_json(self) -> dict:
        return {"per_epoch": self.per_epoch, "final_accuracy": self.final_accuracy,
                "val_accuracy": self.val_accuracy}


def encoder_descriptor(length: int, vocab_size: int, cfg: VaeConfig) -> list[dict]:
    h = cfg.hidden_channels
    return [
        {"kind": "conv1d", "in_ch": vocab_size, "out_ch": h, "kernel": 5},
        {"kind": "relu"},
        {"kind": "conv1d", "in_ch": h, "out_ch": h, "kernel": 5},
        {"kind": "relu"},
        {"kind": "flatten"},
        {"kind": "dense", "in": h * length, "out": 2 * cfg.latent_dim},
    ]


def decoder_descriptor(length: int, vocab_size: int, cfg: VaeConfig) -> list[dict]:
    h = cfg.hidden_channels
    return [
        {"kind": "dense", "in": cfg.latent_dim, "out": h * length},
        {"kind": "relu"},
        {"kind": "reshape", "shape": [h, length]},
        {"kind": "conv1d", "in_ch": h, "out_ch": h, "kernel": 5},
        {"kind": "relu"},
        {"kind": "conv1d", "in_ch": h, "out_ch": vocab_size, "kernel": 5},
    ]


class VaeModel:
    """Trained (or initialized) encoder/decoder pair for one sequence length."""

    def __init__(self, encoder: Network, decoder: Network, config: VaeConfig,
                 length: int, vocab_size: int):
        self.encoder = encoder
        self.decoder = decoder
        self.config = config
        self.length = length
        self.vocab_size = vocab_size

    @classmethod
    def build(cls, length: int, vocab_size: int, cfg: VaeConfig, seed: int) -> "VaeModel":
        enc = Network.build(encoder_descriptor(length, vocab_size, cfg), seed)
        dec = Network.build(decoder_descriptor(length, vocab_size, cfg), seed + 1)
        return cls(enc, dec, cfg, length, vocab_size)

    @property
    def latent_dim(self) -> int:
        return self.config.latent_dim

    # --- encoding ---

    def _encode_tape(self, x: Tensor) -> tuple[Tensor, Tensor]:
        """x: (B, V, d) one-hot channels; returns mean and bounded log-variance."""
        out = self.encoder.apply(x)
        l = self.latent_dim
        mean = out[:, :l]
        logvar = ad.tanh(out[:, l:] * (1.0 / LOGVAR_BOUND)) * LOGVAR_BOUND
        return mean, logvar

    def encode_batch(self, seqs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        seqs = np.atleast_2d(np.asarray(seqs, dtype=np.int64))
        if seqs.shape[1] != self.length:
            raise ValueError(f"sequence length {seqs.shape[1]} != model length {self.length}")
        x = one_hot_batch(seqs, self.vocab_size).transpose(0, 2, 1)
        mean, logvar = self._encode_tape(Tensor(x))
        return mean.data, logvar.data

    def encode(self, seq: np.ndarray) -> EncoderOutput:
        mean, logvar = self.encode_batch(np.asarray(seq)[None, :])
        return EncoderOutput(mean[0], logvar[0])

    # --- decoding ---

    def decode_logits_tape(self, z: Tensor) -> Tensor:
        """(B, l) latents -> (B, d, V) logits."""
        out = self.decoder.apply(z)           # (B, V, d)
        return ad.transpose(out, (0, 2, 1))

    def decode_logits_batch(self, z: np.ndarray) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=np.float64))
        if z.shape[1] != self.latent_dim:
            raise ValueError(f"latent dimension {z.shape[1]} != model latent_dim {self.latent_dim}")
        return self.decode_logits_tape(Tensor(z)).data

    def decode_logits(self, z: np.ndarray) -> np.ndarray:
        return self.decode_logits_batch(np.asarray(z)[None, :])[0]

    def decode_probs_tape(self, z: Tensor, temperature: float = 1.0) -> Tensor:
        """Softmax-relaxed decoding used by gradient guidance."""
        logits = self.decode_logits_tape(z)
        if temperature != 1.0:
            logits = logits * (1.0 / temperature)
        return ad.softmax(logits, axis=-1)

    def decode_tokens_batch(self, z: np.ndarray) -> np.ndarray:
        # np.argmax takes the lowest index on exact ties
        return self.decode_logits_batch(z).argmax(axis=-1)

    def decode_tokens(self, z: np.ndarray) -> np.ndarray:
        return self.decode_tokens_batch(np.asarray(z)[None, :])[0]

    def networks(self) -> tuple[Network, Network]:
        return self.encoder, self.decoder

    def refresh(self) -> None:
        self.encoder.refresh()
        self.decoder.refresh()


def reparameterize(out: EncoderOutput, noise: np.ndarray) -> np.ndarray:
    """z = mean + exp(log_variance / 2) * noise."""
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape != out.mean.shape:
        raise ValueError(f"noise shape {noise.shape} != mean shape {out.mean.shape}")
    return out.mean + np.exp(0.5 * out.log_variance) * noise


def _loss_tape(model: VaeModel, seqs: np.ndarray, noise: np.ndarray):
    """Tape for total/reconstruction/KL on a batch; returns the three Tensors."""
    seqs = np.atleast_2d(np.asarray(seqs, dtype=np.int64))
    x = one_hot_batch(seqs, model.vocab_size).transpose(0, 2, 1)
    mean, logvar = model._encode_tape(Tensor(x))
    z = mean + ad.exp(logvar * 0.5) * Tensor(noise)
    logits = model.decode_logits_tape(z)                      # (B, d, V)
    # cross-entropy per position: logsumexp - true-token logit
    ce = ad.logsumexp(logits, axis=-1) - ad.gather_last(logits, seqs)
    recon = ad.tmean(ad.tmean(ce, axis=-1))
    # KL(q || N(0,I)) in closed form, summed over latent dims
    kl_terms = mean * mean + ad.exp(logvar) - 1.0 - logvar
    kl = ad.tmean(ad.tsum(kl_terms, axis=-1) * 0.5)
    total = recon + kl * model.config.beta
    return total, recon, kl


def vae_loss(model: VaeModel, seqs: np.ndarray, noise: np.ndarray) -> tuple[float, float, float]:
    """(total, reconstruction, kl): mean cross-entropy per position plus the
    beta-weighted mean KL to the standard-normal prior."""
    total, recon, kl = _loss_tape(model, seqs, noise)
    return float(total.data), float(recon.data), float(kl.data)


def train_vae(data: Dataset, cfg: VaeConfig, seed: int, vocab_size: int = 20,
              val_data: Dataset | None = None) -> tuple[VaeModel, TrainReport]:
    """Adam training on the ELBO; deterministic given the seed. Non-finite
    loss aborts with TrainingDivergedError."""
    model = VaeModel.build(data.length, vocab_size, cfg, seed)
    return _fit_vae(model, data, cfg, seed, val_data)


def _fit_vae(model: VaeModel, data: Dataset, cfg: VaeConfig, seed: int,
             val_data: Dataset | None) -> tuple[VaeModel, TrainReport]:
    rng = np.random.default_rng(seed + 1000)
    params = ParamStore(
        {**{f"enc.{k}": v for k, v in model.encoder.params.arrays.items()},
         **{f"dec.{k}": v for k, v in model.decoder.params.arrays.items()}},
        seed)
    opt_cfg = AdamConfig(learning_rate=cfg.learning_rate)
    opt_state = AdamState()
    report = TrainReport()
    n = data.n
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        sums = np.zeros(3)
        n_batches = 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            seqs = data.sequences[idx]
            noise = rng.standard_normal((idx.size, cfg.latent_dim))
            model.refresh()
            try:
                total, recon, kl = _loss_tape(model, seqs, noise)
            except NonFiniteError as exc:
                raise TrainingDivergedError(f"epoch {epoch}: {exc}") from None
            if not np.isfinite(total.data):
                raise TrainingDivergedError(f"epoch {epoch}: non-finite loss")
            total.backward()
            grads = {**{f"enc.{k}": g for k, g in model.encoder.collect_grads().items()},
                     **{f"dec.{k}": g for k, g in model.decoder.collect_grads().items()}}
            adam_step(params, grads, opt_cfg, opt_state)
            sums += (float(total.data), float(recon.data), float(kl.data))
            n_batches += 1
        report.per_epoch.append({"total": sums[0] / n_batches,
                                 "reconstruction": sums[1] / n_batches,
                                 "kl": sums[2] / n_batches})
    model.refresh()
    report.final_accuracy = reconstruction_accuracy(model, data)
    if val_data is not None:
        report.val_accuracy = reconstruction_accuracy(model, val_data)
    return model, report


def reconstruction_accuracy(model: VaeModel, data: Dataset) -> float:
    """Fraction of positions recovered by noise-free encode/decode (z = mean)."""
    if data.n == 0:
        raise ValueError("empty dataset")
    correct = 0
    for start in range(0, data.n, 512):
        seqs = data.sequences[start:start + 512]
        mean, _ = model.encode_batch(seqs)
        decoded = model.decode_tokens_batch(mean)
        correct += int((decoded == seqs).sum())
    return correct / (data.n * data.length)


def sample_vae_prior(model: VaeModel, count: int, seed: int) -> np.ndarray:
    """Decode count latents drawn from the standard-normal prior; (count, d)."""
    if count == 0:
        return np.empty((0, model.length), dtype=np.int64)
    z = np.random.default_rng(seed).standard_normal((count, model.latent_dim))
    return model.decode_tokens_batch(z)


def save_vae(model: VaeModel, directory) -> dict:
    """Write encoder/decoder checkpoints into the directory; returns checksums."""
    from pathlib import Path

    from .nn.checkpoint import save_checkpoint

    directory = Path(directory)
    extra = {"length": model.length, "vocab_size": model.vocab_size,
             "latent_dim": model.config.latent_dim, "beta": model.config.beta,
             "hidden_channels": model.config.hidden_channels}
    enc = save_checkpoint(directory / "vae_encoder.npz", "vae_encoder",
                          model.encoder.descriptor, model.encoder.params, extra)
    dec = save_checkpoint(directory / "vae_decoder.npz", "vae_decoder",
                          model.decoder.descriptor, model.decoder.params, extra)
    return {"vae_encoder": enc, "vae_decoder": dec}


def load_vae(directory) -> VaeModel:
    from pathlib import Path

    from .nn.checkpoint import CheckpointError, load_checkpoint

    directory = Path(directory)
    kind_e, desc_e, params_e, extra, _ = load_checkpoint(directory / "vae_encoder.npz")
    kind_d, desc_d, params_d, extra_d, _ = load_checkpoint(directory / "vae_decoder.npz")
    if kind_e != "vae_encoder" or kind_d != "vae_decoder":
        raise CheckpointError("checkpoint kinds do not form an encoder/decoder pair")
    if extra != extra_d:
        raise CheckpointError("encoder/decoder checkpoints disagree on model shape")
    cfg = VaeConfig(latent_dim=int(extra["latent_dim"]), beta=float(extra["beta"]),
                    hidden_channels=int(extra["hidden_channels"]))
    return VaeModel(Network(desc_e, params_e), Network(desc_d, params_d), cfg,
                    int(extra["length"]), int(extra["vocab_size"]))
