# Role: 多クラスのランダムグラフ分布から訓練集合を作り、経験損失と統計的損失の差（汎化ギャップ）を測って汎化誤差の上界と並べる。
# How: 訓練集合はクラスごとにちょうど γ_j·m 枚を生成する層化サンプリング。統計的損失も同じく層化モンテカルロで推定し、損失は先頭 Γ 成分の softmax 交差エントロピー（logsumexp）。
# Key functions: `sample_training_set()`, `cross_entropy()`, `empirical_risk()`, `statistical_risk()`, `run_generalization()`
# Collaboration: bounds の `ClassDistribution`/`generalization_bound()` を使い、cli の `generalization` コマンドが gap.csv を書き出す。
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.special import logsumexp

from .bounds import (
    ClassDistribution,
    GeneralizationBound,
    class_counts,
    generalization_bound,
    signal_regularity,
)
from .errors import InvalidArgumentError, NonLipschitzKernelError, NonLipschitzSignalError, OutputDimensionError
from .experiments import build_network, run_trials
from .kernels import RandomGraphModel, SampledGraph, regularity_profile, sample_graph
from .mpnn import MPNNSpec, global_pool, gmpnn_forward, layer_constants
from .seeds import STREAM_RISK, STREAM_TRAINING, STREAM_TRIAL, derive_seed, rng_from

# L_V of softmax cross-entropy w.r.t. sup-norm logit perturbations
DEFAULT_LOSS_LIPSCHITZ = 2.0


def _log(msg: str) -> None:
    print(f"[generalization] {msg}", file=sys.stderr)


@dataclass
class GapConfig:
    class_dist: ClassDistribution
    m: int = 20
    trials: int = 10
    loss_lipschitz: float = DEFAULT_LOSS_LIPSCHITZ
    mc_size: int = 400
    network: str = "graphsage"
    dims: list[int] = field(default_factory=lambda: [1, 16, 2])
    init_scale: float = 1.0
    statement_exponent: bool = False
    dudley_c: float = 1.0
    seed: int = 0
    threads: int = 1

    def validate(self) -> None:
        if self.m < 1 or self.trials < 1:
            raise InvalidArgumentError("m and trials must be >= 1")
        if self.mc_size < 10 * self.m:
            raise InvalidArgumentError(f"mc_size={self.mc_size} must be >= 10*m={10 * self.m}")
        if not self.loss_lipschitz > 0:
            raise InvalidArgumentError("loss_lipschitz must be > 0")
        class_counts(self.class_dist, self.m)


def _model(dist: ClassDistribution, j: int) -> RandomGraphModel:
    cls = dist.classes[j]
    return RandomGraphModel(cls.kernel, cls.signal, dist.space)


def sample_training_set(dist: ClassDistribution, m: int, seed: int) -> list[tuple[SampledGraph, int]]:
    """Exactly gamma_j*m graphs of class j, node counts drawn from the node law."""
    counts = class_counts(dist, int(m))
    rng = rng_from(derive_seed(seed, STREAM_TRAINING))
    out: list[tuple[SampledGraph, int]] = []
    for j, count in enumerate(counts):
        model = _model(dist, j)
        for _ in range(count):
            n = dist.node_law.sample(rng)
            out.append((sample_graph(model, n, derive_seed(seed, STREAM_TRAINING, len(out))), j))
    return out


def cross_entropy(logits: Any, label: int, num_classes: int) -> float:
    z = np.asarray(logits, dtype=np.float64).reshape(-1)
    if z.shape[0] < num_classes:
        raise OutputDimensionError(output_dim=int(z.shape[0]), classes=num_classes)
    if not 0 <= label < num_classes:
        raise InvalidArgumentError(f"label {label} outside [0, {num_classes})")
    head = z[:num_classes]
    return float(logsumexp(head) - head[label])


def graph_loss(net: MPNNSpec, g: SampledGraph, label: int, num_classes: int) -> float:
    return cross_entropy(global_pool(gmpnn_forward(net, g)), label, num_classes)


def _check_output(net: MPNNSpec, num_classes: int) -> None:
    if net.output_dim < num_classes:
        raise OutputDimensionError(output_dim=net.output_dim, classes=num_classes)


def empirical_risk(net: MPNNSpec, training: Sequence[tuple[SampledGraph, int]], num_classes: int) -> float:
    if not training:
        raise InvalidArgumentError("empirical risk of an empty training set")
    _check_output(net, num_classes)
    return float(np.mean([graph_loss(net, g, y, num_classes) for g, y in training]))


def statistical_risk(net: MPNNSpec, dist: ClassDistribution, mc_size: int, seed: int) -> float:
    """Stratified Monte-Carlo: per-class mean loss over fresh graphs, weighted by gamma_j."""
    if mc_size < 1:
        raise InvalidArgumentError("mc_size must be >= 1")
    gamma = dist.num_classes
    _check_output(net, gamma)
    rng = rng_from(derive_seed(seed, STREAM_RISK))
    total = 0.0
    drawn = 0
    for j, cls in enumerate(dist.classes):
        if cls.gamma == 0:
            continue
        model = _model(dist, j)
        count = max(1, int(round(cls.gamma * mc_size)))
        losses = []
        for _ in range(count):
            n = dist.node_law.sample(rng)
            g = sample_graph(model, n, derive_seed(seed, STREAM_RISK, drawn))
            losses.append(graph_loss(net, g, j, gamma))
            drawn += 1
        total += cls.gamma * float(np.mean(losses))
    return total


@dataclass(frozen=True)
class GapRow:
    trial: int
    m: int
    r_emp: float
    r_exp: float
    sq_gap: float
    bound: float


@dataclass
class GapResult:
    rows: list[GapRow]
    bound: GeneralizationBound | None
    bound_status: str
    r_exp: float

    @property
    def mean_sq_gap(self) -> float:
        return float(np.mean([row.sq_gap for row in self.rows]))

    def summary(self) -> dict[str, Any]:
        return {
            "trials": len(self.rows),
            "m": self.rows[0].m if self.rows else None,
            "r_exp": self.r_exp,
            "mean_sq_gap": self.mean_sq_gap,
            "max_sq_gap": max(row.sq_gap for row in self.rows),
            "bound": None if self.bound is None else self.bound.to_dict(),
            "bound_status": self.bound_status,
        }


def _gap_bound(cfg: GapConfig, net: MPNNSpec) -> tuple[GeneralizationBound | None, str]:
    dist = cfg.class_dist
    try:
        profiles = [regularity_profile(c.kernel, dist.space, cfg.dudley_c) for c in dist.classes]
        sigs = [signal_regularity(c.signal) for c in dist.classes]
        bound = generalization_bound(
            dist,
            layer_constants(net),
            profiles,
            sigs,
            cfg.m,
            cfg.loss_lipschitz,
            statement_exponent=cfg.statement_exponent,
        )
    except (NonLipschitzKernelError, NonLipschitzSignalError) as e:
        _log(f"bound unavailable: {e}")
        return None, f"unavailable: {e}"
    return bound, "ok"


def run_generalization(cfg: GapConfig, net: MPNNSpec | None = None) -> GapResult:
    """Squared gap (R_emp - R_exp)^2 over independent training-set draws with one fixed network."""
    cfg.validate()
    dist = cfg.class_dist
    net = net or build_network(cfg.network, cfg.dims, cfg.seed, cfg.init_scale)
    _check_output(net, dist.num_classes)
    r_exp = statistical_risk(net, dist, cfg.mc_size, cfg.seed)
    bound, status = _gap_bound(cfg, net)
    bound_value = math.nan if bound is None else bound.value

    def _trial(t: int) -> GapRow:
        training = sample_training_set(dist, cfg.m, derive_seed(cfg.seed, STREAM_TRIAL, t))
        r_emp = empirical_risk(net, training, dist.num_classes)
        gap = r_emp - r_exp
        return GapRow(t, cfg.m, r_emp, r_exp, gap * gap, bound_value)

    rows = run_trials(_trial, cfg.trials, cfg.threads)
    result = GapResult(rows, bound, status, r_exp)
    _log(f"m={cfg.m}: mean squared gap {result.mean_sq_gap:.4g} over {cfg.trials} trials")
    return result
