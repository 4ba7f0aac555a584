"""Flow-matching prior over latent vectors.

A velocity-field net is regressed onto the straight-line target z1 - z0 along
the linear interpolation path, then sampled by Euler integration of the
learned field from t=0 (standard normal) to t=1 (data). The field can also
condition on a scalar fitness label, which turns integration into a directly
learned conditional sampler.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TrainingDivergedError
from .nn import autodiff as ad
from .nn.autodiff import Tensor
from .nn.layers import Network, NonFiniteError
from .nn.optim import AdamConfig, AdamState, adam_step


@dataclass(frozen=True)
class FlowTrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 256
    epochs: int = 400
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError("bad training hyperparameters")


def sinusoidal_embedding(values: np.ndarray, dim: int, max_freq: float = 64.0) -> np.ndarray:
    """(B,) scalars -> (B, dim) sin/cos features with geometric frequencies."""
    if dim % 2 != 0:
        raise ValueError("embedding dim must be even")
    values = np.atleast_1d(np.asarray(values, dtype=np.float64))
    freqs = np.geomspace(1.0, max_freq, dim // 2) * np.pi
    angles = values[:, None] * freqs[None, :]
    return np.concatenate([np.sin(angles), np.cos(angles)], axis=1)


def trunk_descriptor(latent_dim: int, time_embed_dim: int, fitness_embed_dim: int,
                     hidden: int = 128) -> list[dict]:
    in_dim = latent_dim + time_embed_dim + fitness_embed_dim
    return [
        {"kind": "dense", "in": in_dim, "out": hidden},
        {"kind": "leaky_relu", "alpha": 0.01},
        {"kind": "dense", "in": hidden, "out": hidden},
        {"kind": "leaky_relu", "alpha": 0.01},
        {"kind": "dense", "in": hidden, "out": latent_dim},
    ]


class FlowModel:
    """Velocity field v(z, t[, y]) with sinusoidal time (and optional fitness)
    embeddings concatenated to the latent features."""

    def __init__(self, net: Network, latent_dim: int, time_embed_dim: int = 16,
                 fitness_embed_dim: int = 0, max_freq: float = 64.0):
        self.net = net
        self.latent_dim = latent_dim
        self.time_embed_dim = time_embed_dim
        self.fitness_embed_dim = fitness_embed_dim
        self.max_freq = max_freq

    @classmethod
    def build(cls, latent_dim: int, seed: int, conditional: bool = False,
              hidden: int = 128, time_embed_dim: int = 16) -> "FlowModel":
        y_dim = time_embed_dim if conditional else 0
        net = Network.build(trunk_descriptor(latent_dim, time_embed_dim, y_dim, hidden), seed)
        return cls(net, latent_dim, time_embed_dim, y_dim)

    @property
    def conditional(self) -> bool:
        return self.fitness_embed_dim > 0

    def extra_meta(self) -> dict:
        return {"latent_dim": self.latent_dim, "time_embed_dim": self.time_embed_dim,
                "fitness_embed_dim": self.fitness_embed_dim, "max_freq": self.max_freq,
                "conditional": self.conditional, "time_embedding": "sinusoidal"}

    def _features(self, z: Tensor, t, y) -> Tensor:
        b = z.shape[0]
        t = np.broadcast_to(np.asarray(t, dtype=np.float64), (b,))
        parts = [z, Tensor(sinusoidal_embedding(t, self.time_embed_dim, self.max_freq))]
        if self.conditional:
            if y is None:
                raise ValueError("conditional flow model needs a fitness value y")
            y = np.broadcast_to(np.asarray(y, dtype=np.float64), (b,))
            parts.append(Tensor(sinusoidal_embedding(y, self.fitness_embed_dim, self.max_freq)))
        elif y is not None:
            raise ValueError("unconditional flow model got a fitness value")
        return ad.concat(parts, axis=1)

    def velocity_tape(self, z: Tensor, t, y=None) -> Tensor:
        return self.net.apply(self._features(z, t, y))

    def velocity(self, z: np.ndarray, t, y=None) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=np.float64))
        if z.shape[1] != self.latent_dim:
            raise ValueError(f"latent dimension {z.shape[1]} != model {self.latent_dim}")
        return self.velocity_tape(Tensor(z), t, y).data


def interpolate(z0: np.ndarray, z1: np.ndarray, t) -> np.ndarray:
    """Straight-line path (1-t)*z0 + t*z1; t scalar or per-row, within [0, 1]."""
    z0 = np.asarray(z0, dtype=np.float64)
    z1 = np.asarray(z1, dtype=np.float64)
    if z0.shape != z1.shape:
        raise ValueError("endpoint shape mismatch")
    t_arr = np.asarray(t, dtype=np.float64)
    if (t_arr < 0).any() or (t_arr > 1).any():
        raise ValueError("t must lie in [0, 1]")
    if t_arr.ndim == 1:
        t_arr = t_arr[:, None]
    return (1.0 - t_arr) * z0 + t_arr * z1


def _loss_tape(model: FlowModel, z1: np.ndarray, z0: np.ndarray, t: np.ndarray,
               y: np.ndarray | None) -> Tensor:
    zt = interpolate(z0, z1, t)
    v = model.velocity_tape(Tensor(zt), t, y)
    resid = v - Tensor(z1 - z0)
    return ad.tmean(ad.tsum(resid * resid, axis=1) * 0.5)


def flow_matching_loss(model: FlowModel, z1: np.ndarray, z0: np.ndarray,
                       t: np.ndarray, y: np.ndarray | None = None) -> float:
    """Mean over the batch of 0.5 * ||v(path(t)) - (z1 - z0)||^2."""
    return float(_loss_tape(model, np.atleast_2d(z1), np.atleast_2d(z0),
                            np.atleast_1d(t), y).data)


def train_flow(latents: np.ndarray, cfg: FlowTrainConfig,
               labels: np.ndarray | None = None, conditional: bool = False,
               hidden: int = 128) -> tuple[FlowModel, list[float]]:
    """Fit the velocity field on encoded latents; fresh noise endpoints and
    times are drawn every epoch. Returns the model and per-epoch losses."""
    latents = np.atleast_2d(np.asarray(latents, dtype=np.float64))
    if conditional:
        if labels is None:
            raise ValueError("conditional training needs fitness labels")
        labels = np.asarray(labels, dtype=np.float64)
        if labels.shape != (latents.shape[0],):
            raise ValueError("labels must be one scalar per latent")
    n, dim = latents.shape
    model = FlowModel.build(dim, seed=cfg.seed, conditional=conditional, hidden=hidden)
    rng = np.random.default_rng(cfg.seed + 3000)
    opt_cfg = AdamConfig(learning_rate=cfg.learning_rate)
    opt_state = AdamState()
    per_epoch: list[float] = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total, batches = 0.0, 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            z1 = latents[idx]
            z0 = rng.standard_normal(z1.shape)
            t = rng.uniform(0.0, 1.0, size=idx.size)
            y = labels[idx] if conditional else None
            model.net.refresh()
            try:
                loss = _loss_tape(model, z1, z0, t, y)
            except NonFiniteError as exc:
                raise TrainingDivergedError(f"epoch {epoch}: {exc}") from None
            if not np.isfinite(loss.data):
                raise TrainingDivergedError(f"epoch {epoch}: non-finite loss")
            loss.backward()
            adam_step(model.net.params, model.net.collect_grads(), opt_cfg, opt_state)
            total += float(loss.data)
            batches += 1
        per_epoch.append(total / batches)
    model.net.refresh()
    return model, per_epoch


def save_flow(model: FlowModel, path) -> str:
    from .nn.checkpoint import save_checkpoint

    return save_checkpoint(path, "flow", model.net.descriptor, model.net.params,
                           extra=model.extra_meta())


def load_flow(path) -> FlowModel:
    from .nn.checkpoint import load_checkpoint

    kind, descriptor, params, extra, _ = load_checkpoint(path)
    if kind != "flow":
        raise ValueError(f"checkpoint kind {kind!r} is not a flow model")
    return FlowModel(Network(descriptor, params), int(extra["latent_dim"]),
                     int(extra["time_embed_dim"]), int(extra["fitness_embed_dim"]),
                     float(extra.get("max_freq", 64.0)))


def euler_step(model, z: np.ndarray, t: float, dt: float, y=None) -> np.ndarray:
    """Single forward-Euler update; shared by plain integration and guided
    sampling so the two agree bit for bit."""
    return z + dt * model.velocity(z, t, y)


def euler_integrate(model, z0: np.ndarray, steps: int, y=None,
                    record_trajectory: bool = True) -> np.ndarray:
    """Integrate dz/dt = v(z, t) from t=0 to 1 with the given number of Euler
    steps. Returns the (steps+1, B, dim) trajectory (or just the final (B, dim)
    state when record_trajectory=False). Aborts on non-finite states, naming
    the step."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    z = np.atleast_2d(np.asarray(z0, dtype=np.float64)).copy()
    dt = 1.0 / steps
    traj = [z.copy()] if record_trajectory else None
    for k in range(steps):
        z = euler_step(model, z, k * dt, dt, y)
        if not np.isfinite(z).all():
            raise FloatingPointError(f"non-finite state at integration step {k}")
        if record_trajectory:
            traj.append(z.copy())
    return np.stack(traj) if record_trajectory else z
