"""Declarative layer descriptors and the Network container.

A descriptor is a JSON-friendly list of layer dicts; the frozen layer set is
exactly what the models here need (dense, stride-1 same-padding 1-D conv,
relu/leaky_relu/tanh, softmax, global average pooling, flatten/reshape).
Parameters live in a ParamStore keyed "layerindex.name" and initialize
deterministically from the store's seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor


class NonFiniteError(RuntimeError):
    """A layer produced NaN/inf activations."""


_LAYER_KINDS = ("dense", "conv1d", "relu", "leaky_relu", "tanh", "softmax",
                "global_avg_pool", "flatten", "reshape")


def validate_descriptor(descriptor) -> list[str]:
    """Return a list of problems (empty when the descriptor is well formed)."""
    problems = []
    if not isinstance(descriptor, (list, tuple)) or not descriptor:
        return ["descriptor must be a non-empty list of layer dicts"]
    for i, layer in enumerate(descriptor):
        if not isinstance(layer, dict) or "kind" not in layer:
            problems.append(f"layer {i}: not a dict with a 'kind' key")
            continue
        kind = layer["kind"]
        if kind not in _LAYER_KINDS:
            problems.append(f"layer {i}: unsupported kind {kind!r}")
            continue
        if kind == "dense":
            if not (isinstance(layer.get("in"), int) and isinstance(layer.get("out"), int)
                    and layer["in"] > 0 and layer["out"] > 0):
                problems.append(f"layer {i}: dense needs positive int 'in'/'out'")
        elif kind == "conv1d":
            ok = all(isinstance(layer.get(k), int) and layer[k] > 0
                     for k in ("in_ch", "out_ch", "kernel"))
            if not ok or layer.get("kernel", 0) % 2 != 1:
                problems.append(f"layer {i}: conv1d needs positive int 'in_ch'/'out_ch' and odd 'kernel'")
        elif kind == "leaky_relu":
            if not isinstance(layer.get("alpha", 0.01), (int, float)):
                problems.append(f"layer {i}: leaky_relu 'alpha' must be numeric")
        elif kind == "reshape":
            shape = layer.get("shape")
            if not (isinstance(shape, (list, tuple)) and all(isinstance(s, int) for s in shape)):
                problems.append(f"layer {i}: reshape needs an int 'shape' list")
    return problems


@dataclass
class ParamStore:
    """Named parameter arrays plus the seed they were initialized from."""

    arrays: dict[str, np.ndarray]
    rng_seed: int

    def copy(self) -> "ParamStore":
        return ParamStore({k: v.copy() for k, v in self.arrays.items()}, self.rng_seed)

    def check_finite(self) -> None:
        for name, arr in self.arrays.items():
            if not np.isfinite(arr).all():
                raise NonFiniteError(f"parameter {name!r} contains non-finite values")

    def total_size(self) -> int:
        return sum(a.size for a in self.arrays.values())


def init_params(descriptor, seed: int) -> ParamStore:
    """Glorot-uniform weights, zero biases, drawn in layer order so the same
    (descriptor, seed) pair always produces identical arrays."""
    problems = validate_descriptor(descriptor)
    if problems:
        raise ValueError("bad descriptor: " + "; ".join(problems))
    rng = np.random.default_rng(seed)
    arrays: dict[str, np.ndarray] = {}
    for i, layer in enumerate(descriptor):
        kind = layer["kind"]
        if kind == "dense":
            fan_in, fan_out = layer["in"], layer["out"]
            s = np.sqrt(6.0 / (fan_in + fan_out))
            arrays[f"{i}.weight"] = rng.uniform(-s, s, size=(fan_in, fan_out))
            arrays[f"{i}.bias"] = np.zeros(fan_out)
        elif kind == "conv1d":
            cin, cout, k = layer["in_ch"], layer["out_ch"], layer["kernel"]
            s = np.sqrt(6.0 / (cin * k + cout * k))
            arrays[f"{i}.weight"] = rng.uniform(-s, s, size=(cout, cin, k))
            arrays[f"{i}.bias"] = np.zeros(cout)
    return ParamStore(arrays, seed)


class Network:
    """A descriptor-driven feed-forward stack over batched inputs.

    Inputs are (B, features) for dense stacks or (B, channels, length) for
    conv stacks; `flatten`/`reshape` layers move between the two.
    """

    def __init__(self, descriptor, params: ParamStore):
        problems = validate_descriptor(descriptor)
        if problems:
            raise ValueError("bad descriptor: " + "; ".join(problems))
        self.descriptor = [dict(layer) for layer in descriptor]
        self.params = params
        self._tensors = {name: Tensor(arr) for name, arr in params.arrays.items()}

    @classmethod
    def build(cls, descriptor, seed: int) -> "Network":
        return cls(descriptor, init_params(descriptor, seed))

    def refresh(self) -> None:
        """Re-wrap parameter arrays after an optimizer step."""
        self._tensors = {name: Tensor(arr) for name, arr in self.params.arrays.items()}

    def apply(self, x: Tensor) -> Tensor:
        """Tape-aware forward pass; raises NonFiniteError naming the bad layer."""
        for i, layer in enumerate(self.descriptor):
            kind = layer["kind"]
            if kind == "dense":
                x = ad.matmul(x, self._tensors[f"{i}.weight"]) + self._tensors[f"{i}.bias"]
            elif kind == "conv1d":
                x = ad.conv1d(x, self._tensors[f"{i}.weight"], self._tensors[f"{i}.bias"])
            elif kind == "relu":
                x = ad.relu(x)
            elif kind == "leaky_relu":
                x = ad.leaky_relu(x, layer.get("alpha", 0.01))
            elif kind == "tanh":
                x = ad.tanh(x)
            elif kind == "softmax":
                x = ad.softmax(x, axis=-1)
            elif kind == "global_avg_pool":
                x = ad.tmean(x, axis=-1)
            elif kind == "flatten":
                x = ad.reshape(x, (x.shape[0], -1))
            elif kind == "reshape":
                x = ad.reshape(x, (x.shape[0], *layer["shape"]))
            if not np.isfinite(x.data).all():
                raise NonFiniteError(f"layer {i} ({kind}) produced non-finite values")
        return x

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.apply(Tensor(x)).data

    def gradients(self, x: np.ndarray, adjoint: np.ndarray):
        """Exact reverse-mode derivatives of `forward` at `x`, seeded with the
        given output adjoint. Returns (parameter grads by name, input grad)."""
        self.refresh()
        xt = Tensor(x)
        out = self.apply(xt)
        out.backward(adjoint)
        grads = {name: (t.grad if t.grad is not None else np.zeros_like(t.data))
                 for name, t in self._tensors.items()}
        xg = xt.grad if xt.grad is not None else np.zeros_like(xt.data)
        return grads, xg

    def param_tensors(self) -> dict[str, Tensor]:
        return self._tensors

    def collect_grads(self) -> dict[str, np.ndarray]:
        return {name: (t.grad if t.grad is not None else np.zeros_like(t.data))
                for name, t in self._tensors.items()}
