"""Guided posterior sampling in latent space.

Each chain integrates the learned flow from Gaussian noise to the data end of
the path; after every Euler step, a configurable number of inner gradient
steps pulls the state toward latents whose decoded sequence the predictor
scores at the target fitness. The default ("manifold") variant evaluates the
predictor at the one-shot endpoint extrapolation of the current state while
differentiating at the state itself, which keeps updates on the time-t
manifold; the "naive" variant differentiates the predictor directly at the
current state. Decoded batches are deduplicated, ranked by predictor score on
the hard one-hot encoding, and cut to the top k.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError
from .flow import FlowModel, euler_step
from .nn import autodiff as ad
from .nn.autodiff import Tensor
from .nn.checkpoint import params_checksum
from .predictor import PredictorModel
from .seqs import detokenize
from .vae import VaeModel

MODES = ("manifold", "naive", "unconditional", "learned_posterior")
OBJECTIVES = ("match_target", "maximize")


@dataclass(frozen=True)
class SamplerConfig:
    steps: int = 32              # outer Euler (ODE) steps
    guidance_steps: int = 0      # inner gradient steps per Euler step
    alpha: float = 0.0           # guidance strength (constant across steps)
    target_y: float = 1.0        # desired fitness on the normalized scale
    batch: int = 512             # chains sampled before selection
    top_k: int = 128             # sequences kept after dedup + ranking
    mode: str = "manifold"
    seed: int = 0
    temperature: float = 1.0     # softmax relaxation for guidance-time decoding
    objective: str = "match_target"

    def __post_init__(self):
        problems = []
        if self.steps < 1:
            problems.append("steps must be >= 1")
        if self.guidance_steps < 0:
            problems.append("guidance_steps must be >= 0")
        if self.alpha < 0:
            problems.append("alpha must be >= 0")
        if self.batch < 1 or not (1 <= self.top_k <= self.batch):
            problems.append("need 1 <= top_k <= batch")
        if self.mode not in MODES:
            problems.append(f"mode must be one of {MODES}")
        if self.objective not in OBJECTIVES:
            problems.append(f"objective must be one of {OBJECTIVES}")
        if self.temperature <= 0:
            problems.append("temperature must be > 0")
        if self.mode == "unconditional" and (self.alpha != 0 or self.guidance_steps != 0):
            problems.append("unconditional mode requires alpha=0 and guidance_steps=0")
        if problems:
            raise ConfigError(problems)


@dataclass
class SampleResult:
    sequences: np.ndarray          # (k, d) unique, ranked by predictor score
    predictor_scores: np.ndarray   # (k,) descending
    raw_latents: np.ndarray        # (batch, l) final latents, chain order
    raw_sequences: np.ndarray      # (batch, d) decoded chains before dedup
    selected_chain: np.ndarray     # (k,) first chain index per kept sequence
    shortfall: bool                # fewer unique decodes than top_k
    provenance: dict = field(default_factory=dict)

    def to_json(self, vocab) -> dict:
        return {
            "provenance": self.provenance,
            "shortfall": self.shortfall,
            "n_unique": int(len(self.sequences)),
            "sequences": [detokenize(s, vocab) for s in self.sequences],
            "predictor_scores": [float(s) for s in self.predictor_scores],
            "selected_chain": [int(i) for i in self.selected_chain],
        }


def chain_latent(seed: int, chain_index: int, dim: int) -> np.ndarray:
    """Initial noise of one chain; stream index == chain index."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                       spawn_key=(chain_index,)))
    return rng.standard_normal(dim)


def initial_latents(seed: int, batch: int, dim: int) -> np.ndarray:
    return np.stack([chain_latent(seed, i, dim) for i in range(batch)])


def extrapolate_endpoint(flow: FlowModel, z: np.ndarray, t: float, dt: float,
                         y=None) -> np.ndarray:
    """One-shot extrapolation to the data end of the flow:
    z + (1 - t - dt) * v(z, t)."""
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    return z + (1.0 - t - dt) * flow.velocity(z, t, y)


def _objective_tape(z: Tensor, flow: FlowModel, vae: VaeModel,
                    predictor: PredictorModel, target_y: float, t: float, dt: float,
                    manifold: bool, temperature: float, objective: str,
                    y_cond) -> Tensor:
    """Scalar to minimize, summed over independent chains."""
    if manifold:
        v = flow.velocity_tape(z, t, y_cond)
        z_end = z + (1.0 - t - dt) * v
    else:
        z_end = z
    probs = vae.decode_probs_tape(z_end, temperature)
    scores = predictor.predict_tape(probs)
    if objective == "match_target":
        resid = scores - target_y
        return ad.tsum(resid * resid) * 0.5
    return ad.tsum(scores * scores) * (-0.5)  # maximize: ascend 0.5*||g||^2


def guidance_step(z: np.ndarray, flow: FlowModel, vae: VaeModel,
                  predictor: PredictorModel, target_y: float, alpha: float,
                  t: float, dt: float, *, manifold: bool = True,
                  temperature: float = 1.0, objective: str = "match_target",
                  y_cond=None) -> np.ndarray:
    """One gradient-descent step on the fitness-match objective, per chain."""
    if alpha == 0.0:
        return z
    flow.net.refresh()
    vae.refresh()
    predictor.net.refresh()
    zt = Tensor(np.atleast_2d(np.asarray(z, dtype=np.float64)))
    obj = _objective_tape(zt, flow, vae, predictor, target_y, t, dt,
                          manifold, temperature, objective, y_cond)
    obj.backward()
    grad = zt.grad
    if not np.isfinite(grad).all():
        raise FloatingPointError(f"non-finite guidance gradient at t={t:.4f}")
    return zt.data - alpha * grad


def naive_guidance_step(z, flow, vae, predictor, target_y, alpha, *,
                        temperature: float = 1.0, objective: str = "match_target",
                        y_cond=None) -> np.ndarray:
    """Guidance without the endpoint extrapolation (gradient taken at the
    current state directly)."""
    return guidance_step(z, flow, vae, predictor, target_y, alpha, 0.0, 0.0,
                         manifold=False, temperature=temperature,
                         objective=objective, y_cond=y_cond)


def _checksums(flow: FlowModel, vae: VaeModel, predictor: PredictorModel | None) -> dict:
    out = {"flow": params_checksum(flow.net.params),
           "vae_encoder": params_checksum(vae.encoder.params),
           "vae_decoder": params_checksum(vae.decoder.params)}
    if predictor is not None:
        out["predictor"] = params_checksum(predictor.net.params)
    return out


def guided_sample(cfg: SamplerConfig, flow: FlowModel, vae: VaeModel,
                  predictor: PredictorModel | None,
                  alpha_schedule=None) -> SampleResult:
    """Run `cfg.batch` independent chains and select the top-k unique decoded
    sequences. `alpha_schedule` (t -> alpha) overrides the constant strength.

    Chains: z0 from per-chain RNG streams; per Euler step, advance along the
    learned field, then apply the configured number of guidance steps (none in
    unconditional and learned_posterior modes).
    """
    if vae.latent_dim != flow.latent_dim:
        raise ConfigError([f"latent dim mismatch: vae {vae.latent_dim} vs flow {flow.latent_dim}"])
    if cfg.mode == "learned_posterior" and not flow.conditional:
        raise ConfigError(["learned_posterior mode needs a fitness-conditioned flow model"])
    needs_guidance = cfg.mode in ("manifold", "naive") and cfg.guidance_steps > 0 \
        and (cfg.alpha > 0 or alpha_schedule is not None)
    if cfg.mode in ("manifold", "naive") and predictor is None:
        raise ConfigError(["guided modes need a predictor"])
    if predictor is not None and predictor.length != vae.length:
        raise ConfigError([f"length mismatch: predictor {predictor.length} vs decoder {vae.length}"])

    y_cond = cfg.target_y if flow.conditional else None
    z = initial_latents(cfg.seed, cfg.batch, flow.latent_dim)
    dt = 1.0 / cfg.steps
    for k in range(cfg.steps):
        t = k * dt
        z = euler_step(flow, z, t, dt, y_cond)
        if not np.isfinite(z).all():
            raise FloatingPointError(f"non-finite state at integration step {k}")
        if needs_guidance:
            alpha = cfg.alpha if alpha_schedule is None else float(alpha_schedule(t))
            if alpha < 0:
                raise ConfigError(["alpha_schedule returned a negative strength"])
            for _ in range(cfg.guidance_steps):
                z = guidance_step(z, flow, vae, predictor, cfg.target_y, alpha,
                                  t, dt, manifold=(cfg.mode == "manifold"),
                                  temperature=cfg.temperature,
                                  objective=cfg.objective, y_cond=y_cond)
    raw_sequences = vae.decode_tokens_batch(z)
    sequences, scores, selected, shortfall = _select_top_k(
        raw_sequences, predictor, cfg.top_k)
    provenance = {
        "config": asdict(cfg),
        "checksums": _checksums(flow, vae, predictor),
        "chain_rng": "SeedSequence(entropy=seed, spawn_key=(chain_index,))",
    }
    return SampleResult(sequences=sequences, predictor_scores=scores,
                        raw_latents=z, raw_sequences=raw_sequences,
                        selected_chain=selected, shortfall=shortfall,
                        provenance=provenance)


def _select_top_k(decoded: np.ndarray, predictor: PredictorModel | None,
                  top_k: int):
    """Dedup (keeping first chain occurrence), rank by predictor score with
    lexicographic tie-break, cut to top_k."""
    first_seen: dict[bytes, int] = {}
    for i, row in enumerate(decoded):
        key = row.tobytes()
        if key not in first_seen:
            first_seen[key] = i
    chain_idx = np.array(sorted(first_seen.values()))
    unique = decoded[chain_idx]
    if predictor is not None:
        scores = predictor.predict_sequences(unique)
    else:
        scores = np.zeros(len(unique))
    order = sorted(range(len(unique)),
                   key=lambda i: (-scores[i], tuple(unique[i])))
    order = order[:top_k]
    shortfall = len(unique) < top_k
    return unique[order], scores[order], chain_idx[order], shortfall
