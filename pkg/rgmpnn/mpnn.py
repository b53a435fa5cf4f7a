# Role: MPNN（メッセージ/更新 MLP の列）と、平均集約による gMPNN の順伝播・グローバルプーリング・正則性定数の抽出を提供する。
# How: MLP は (重み, バイアス, 活性化) の層の列。集約は w_ij / d_i の重み付き平均で、メッセージ関数がアフィンなら閉形式、そうでなければ行ブロックごとに辺単位で評価する。
# Key functions: `mlp_forward()`, `mlp_lipschitz_upper()`, `formal_bias()`, `aggregate_messages()`, `gmpnn_forward()`, `global_pool()`, `graphsage_random()`, `layer_constants()`
# Collaboration: cmpnn が `aggregate_messages()` を連続版でも使い、bounds が `LayerConstants` を、experiments/generalization が順伝播を使う。
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np
from scipy import sparse

from .errors import InvalidArgumentError, IsolatedNodeError
from .kernels import SampledGraph
from .seeds import rng_from

# pairs of (target, source) evaluated at once on the general message path
PAIR_BLOCK = 1 << 20


class Activation(str, Enum):
    RELU = "relu"
    IDENTITY = "identity"


@dataclass(frozen=True, eq=False)
class DenseLayer:
    weight: np.ndarray
    bias: np.ndarray
    activation: Activation = Activation.IDENTITY

    def __post_init__(self) -> None:
        w = np.array(self.weight, dtype=np.float64)
        b = np.array(self.bias, dtype=np.float64).reshape(-1)
        if w.ndim != 2:
            raise InvalidArgumentError(f"layer weight must be 2-d, got shape {w.shape}")
        if b.shape[0] != w.shape[0]:
            raise InvalidArgumentError(f"bias length {b.shape[0]} does not match {w.shape[0]} outputs")
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)
        object.__setattr__(self, "activation", Activation(self.activation))


@dataclass(frozen=True, eq=False)
class MLPSpec:
    layers: tuple[DenseLayer, ...]

    def __post_init__(self) -> None:
        layers = tuple(self.layers)
        if not layers:
            raise InvalidArgumentError("an MLP needs at least one layer")
        for prev, nxt in zip(layers[:-1], layers[1:]):
            if nxt.weight.shape[1] != prev.weight.shape[0]:
                raise InvalidArgumentError(
                    f"layer dims do not chain: {prev.weight.shape[0]} -> {nxt.weight.shape[1]}"
                )
        object.__setattr__(self, "layers", layers)

    @property
    def input_dim(self) -> int:
        return int(self.layers[0].weight.shape[1])

    @property
    def output_dim(self) -> int:
        return int(self.layers[-1].weight.shape[0])

    @property
    def is_affine(self) -> bool:
        return all(layer.activation == Activation.IDENTITY for layer in self.layers)


@dataclass(frozen=True, eq=False)
class MPNNLayer:
    phi: MLPSpec
    psi: MLPSpec


@dataclass(frozen=True, eq=False)
class MPNNSpec:
    layers: tuple[MPNNLayer, ...]

    def __post_init__(self) -> None:
        layers = tuple(self.layers)
        if not layers:
            raise InvalidArgumentError("an MPNN needs T >= 1 layers")
        f_prev = layers[0].phi.input_dim // 2
        for t, layer in enumerate(layers, start=1):
            if layer.phi.input_dim != 2 * f_prev:
                raise InvalidArgumentError(f"layer {t}: message input {layer.phi.input_dim} != 2*{f_prev}")
            h = layer.phi.output_dim
            if layer.psi.input_dim != f_prev + h:
                raise InvalidArgumentError(f"layer {t}: update input {layer.psi.input_dim} != {f_prev}+{h}")
            f_prev = layer.psi.output_dim
        object.__setattr__(self, "layers", layers)

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def feature_dims(self) -> list[int]:
        return [self.layers[0].phi.input_dim // 2] + [layer.psi.output_dim for layer in self.layers]

    @property
    def input_dim(self) -> int:
        return self.feature_dims[0]

    @property
    def output_dim(self) -> int:
        return self.feature_dims[-1]


@dataclass(frozen=True)
class LayerConstants:
    lip_phi: float
    lip_psi: float
    bias_phi: float
    bias_psi: float

    def __post_init__(self) -> None:
        for name in ("lip_phi", "lip_psi", "bias_phi", "bias_psi"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val >= 0):
                raise InvalidArgumentError(f"{name} must be finite and >= 0, got {val!r}")

    def to_dict(self) -> dict[str, float]:
        return {
            "lip_phi": self.lip_phi,
            "lip_psi": self.lip_psi,
            "bias_phi": self.bias_phi,
            "bias_psi": self.bias_psi,
        }


# --- MLPs --------------------------------------------------------------------------


def mlp_forward(m: MLPSpec, x: Any) -> np.ndarray:
    """Apply the MLP to one vector or to each row of a matrix."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim not in (1, 2) or arr.shape[-1] != m.input_dim:
        raise InvalidArgumentError(f"MLP expects input dim {m.input_dim}, got shape {arr.shape}")
    out = arr
    for layer in m.layers:
        out = out @ layer.weight.T + layer.bias
        if layer.activation == Activation.RELU:
            out = np.maximum(out, 0.0)
    return out


def mlp_lipschitz_upper(m: MLPSpec) -> float:
    # induced inf-norm = max absolute row sum; activations are 1-Lipschitz
    lip = 1.0
    for layer in m.layers:
        lip *= float(np.max(np.sum(np.abs(layer.weight), axis=1))) if layer.weight.size else 0.0
    return lip


def formal_bias(m: MLPSpec) -> float:
    out = mlp_forward(m, np.zeros(m.input_dim))
    return float(np.max(np.abs(out)))


def _affine_parts(m: MLPSpec) -> tuple[np.ndarray, np.ndarray]:
    mat = np.eye(m.input_dim)
    for layer in m.layers:
        mat = layer.weight @ mat
    return mat, mlp_forward(m, np.zeros(m.input_dim))


def identity_mlp(dim: int) -> MLPSpec:
    return MLPSpec((DenseLayer(np.eye(dim), np.zeros(dim)),))


def affine_mlp(weight: Any, bias: Any | None = None, activation: Activation | str = Activation.IDENTITY) -> MLPSpec:
    w = np.asarray(weight, dtype=np.float64)
    b = np.zeros(w.shape[0]) if bias is None else bias
    return MLPSpec((DenseLayer(w, b, Activation(activation)),))


def message_selector(dim: int) -> MLPSpec:
    """Phi(a, b) = b."""
    return affine_mlp(np.hstack([np.zeros((dim, dim)), np.eye(dim)]))


def sage_update(w1: Any, w2: Any, activation: Activation | str = Activation.IDENTITY) -> MLPSpec:
    """Psi(a, m) = act(W1 a + W2 m)."""
    return affine_mlp(np.hstack([np.asarray(w1, dtype=np.float64), np.asarray(w2, dtype=np.float64)]), None, activation)


# --- aggregation -----------------------------------------------------------------------


def _row_sums(weights: np.ndarray | sparse.spmatrix) -> np.ndarray:
    if sparse.issparse(weights):
        return np.asarray(weights.sum(axis=1)).ravel()
    return np.asarray(weights).sum(axis=1)


def aggregate_messages(
    phi: MLPSpec,
    weights: np.ndarray | sparse.spmatrix,
    targets: np.ndarray,
    sources: np.ndarray,
    *,
    row_offset: int = 0,
) -> np.ndarray:
    """m_i = (1/d_i) * sum_j w_ij * Phi(targets_i, sources_j), with d_i = sum_j w_ij."""
    deg = _row_sums(weights)
    bad = np.flatnonzero(~(deg > 0))
    if bad.size:
        i = int(bad[0])
        raise IsolatedNodeError(node=row_offset + i, degree=float(deg[i]))
    f_dim = targets.shape[1]
    if phi.is_affine:
        mat, const = _affine_parts(phi)
        a_t, a_s = mat[:, :f_dim], mat[:, f_dim:]
        pulled = weights @ sources
        return targets @ a_t.T + const + (np.asarray(pulled) / deg[:, None]) @ a_s.T
    n_t, n_s = targets.shape[0], sources.shape[0]
    out = np.empty((n_t, phi.output_dim))
    step = max(1, PAIR_BLOCK // max(n_s, 1))
    for start in range(0, n_t, step):
        stop = min(n_t, start + step)
        block = weights[start:stop]
        block = block.toarray() if sparse.issparse(block) else np.asarray(block)
        left = np.broadcast_to(targets[start:stop, None, :], (stop - start, n_s, f_dim))
        right = np.broadcast_to(sources[None, :, :], (stop - start, n_s, f_dim))
        pairs = np.concatenate([left, right], axis=2).reshape(-1, 2 * f_dim)
        msgs = mlp_forward(phi, pairs).reshape(stop - start, n_s, phi.output_dim)
        out[start:stop] = np.einsum("ij,ijh->ih", block, msgs) / deg[start:stop, None]
    return out


def mpnn_layer_step(
    layer: MPNNLayer,
    weights: np.ndarray | sparse.spmatrix,
    targets: np.ndarray,
    sources: np.ndarray,
    *,
    row_offset: int = 0,
) -> np.ndarray:
    msgs = aggregate_messages(layer.phi, weights, targets, sources, row_offset=row_offset)
    return mlp_forward(layer.psi, np.hstack([targets, msgs]))


def gmpnn_forward(
    net: MPNNSpec,
    g: SampledGraph,
    *,
    return_all: bool = False,
) -> np.ndarray | list[np.ndarray]:
    """Theta_G(f); with `return_all` the list [f^(0), ..., f^(T)]."""
    if g.feature_dim != net.input_dim:
        raise InvalidArgumentError(f"graph features have {g.feature_dim} columns, network expects {net.input_dim}")
    f = np.asarray(g.features, dtype=np.float64)
    history = [f]
    for layer in net.layers:
        f = mpnn_layer_step(layer, g.weights, f, f)
        history.append(f)
    return history if return_all else f


def global_pool(features: Any) -> np.ndarray:
    arr = np.asarray(features, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise InvalidArgumentError("global_pool needs an N x F matrix with N >= 1")
    return arr.mean(axis=0)


# --- construction ---------------------------------------------------------------------------


def graphsage_random(dims: list[int], seed: int, init_scale: float = 1.0) -> MPNNSpec:
    """Random GraphSAGE: Phi(a, b) = b and Psi(a, m) = act(W1 a + W2 m), ReLU on hidden layers."""
    dims = [int(d) for d in dims]
    if len(dims) < 2 or min(dims) < 1:
        raise InvalidArgumentError("dims needs at least two positive widths")
    rng = rng_from(seed)
    layers = []
    depth = len(dims) - 1
    for t in range(depth):
        f_in, f_out = dims[t], dims[t + 1]
        std = init_scale / math.sqrt(f_in)
        w1 = rng.normal(0.0, std, size=(f_out, f_in))
        w2 = rng.normal(0.0, std, size=(f_out, f_in))
        act = Activation.RELU if t < depth - 1 else Activation.IDENTITY
        layers.append(MPNNLayer(phi=message_selector(f_in), psi=sage_update(w1, w2, act)))
    return MPNNSpec(tuple(layers))


def layer_constants(net: MPNNSpec) -> list[LayerConstants]:
    return [
        LayerConstants(
            lip_phi=mlp_lipschitz_upper(layer.phi),
            lip_psi=mlp_lipschitz_upper(layer.psi),
            bias_phi=formal_bias(layer.phi),
            bias_psi=formal_bias(layer.psi),
        )
        for layer in net.layers
    ]


# --- JSON ------------------------------------------------------------------------------------------


def _mlp_to_json(m: MLPSpec) -> dict[str, Any]:
    return {
        "weights": [layer.weight.tolist() for layer in m.layers],
        "biases": [layer.bias.tolist() for layer in m.layers],
        "acts": [layer.activation.value for layer in m.layers],
    }


def _mlp_from_json(doc: dict[str, Any]) -> MLPSpec:
    weights = doc.get("weights") or []
    biases = doc.get("biases") or []
    acts = doc.get("acts") or [Activation.IDENTITY.value] * len(weights)
    if not (len(weights) == len(biases) == len(acts)):
        raise InvalidArgumentError("MLP JSON needs equally long weights/biases/acts")
    return MLPSpec(
        tuple(
            DenseLayer(np.asarray(w, dtype=np.float64), np.asarray(b, dtype=np.float64), Activation(a))
            for w, b, a in zip(weights, biases, acts)
        )
    )


def mpnn_to_json(net: MPNNSpec) -> dict[str, Any]:
    return {"layers": [{"phi": _mlp_to_json(layer.phi), "psi": _mlp_to_json(layer.psi)} for layer in net.layers]}


def mpnn_from_json(doc: dict[str, Any]) -> MPNNSpec:
    return MPNNSpec(
        tuple(MPNNLayer(phi=_mlp_from_json(item["phi"]), psi=_mlp_from_json(item["psi"])) for item in doc["layers"])
    )
