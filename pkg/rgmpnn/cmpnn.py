# Role: 連続 MPNN（cMPNN）を求積で評価し、連続プーリングと「大きなグラフ上の gMPNN を連続極限の代理にする」参照出力を提供する。
# How: 中間層の信号を求積ノード上の値で表し、各層で W(x, ·) を同じノードで評価して自己整合的に正規化する。重み行列は行ブロックごとに作るので全体を保持しない。
# Key functions: `continuous_aggregate()`, `cmpnn_forward()`, `cmpnn_pool()`, `reference_from_large_graph()`, `ReferenceCache`
# Collaboration: mpnn の `mpnn_layer_step()` を共有し、experiments が参照出力を、テストが求積版との整合性確認に使う。
from __future__ import annotations

import threading
import weakref
from typing import Any

import numpy as np

from .errors import DegenerateDegreeError, IsolatedNodeError, UnsupportedSignalError
from .kernels import Kernel, SampledGraph, kernel_matrix
from .mpnn import MLPSpec, MPNNLayer, MPNNSpec, global_pool, gmpnn_forward, mlp_forward, mpnn_layer_step
from .quadrature import QuadratureSpec, quadrature_nodes
from .signals import Signal
from .space import UNIT_SQUARE, MetricMeasureSpace, as_points

__all__ = [
    "QuadratureSpec",
    "ReferenceCache",
    "cmpnn_forward",
    "cmpnn_pool",
    "continuous_aggregate",
    "reference_from_large_graph",
]

# kernel entries materialized per row block
CHUNK_ENTRIES = 1 << 22


def _require_pointwise(s: Signal) -> None:
    if not s.point_evaluable:
        raise UnsupportedSignalError(kind=s.name)


def continuous_aggregate(
    k: Kernel,
    s: Signal,
    phi: MLPSpec,
    x: Any,
    quad: QuadratureSpec,
    space: MetricMeasureSpace = UNIT_SQUARE,
) -> np.ndarray:
    """Quadrature estimate of M_W Phi(f, f)(x), normalized by d_W(x) on the same nodes."""
    _require_pointwise(s)
    pt = as_points(space, x)
    nodes = quadrature_nodes(quad, space)
    f_nodes = s.evaluate(nodes)
    f_x = s.evaluate(pt)
    w = kernel_matrix(k, pt, nodes, space)[0]
    den = np.sum(w)
    if not den > 0:
        raise DegenerateDegreeError(point=pt[0].tolist())
    msgs = mlp_forward(phi, np.hstack([np.repeat(f_x, nodes.shape[0], axis=0), f_nodes]))
    # one reduction per column so that a constant message of 1 cancels the degree exactly
    num = np.array([np.sum(w * msgs[:, h]) for h in range(msgs.shape[1])])
    return num / den


def _continuous_layer(
    layer: MPNNLayer,
    k: Kernel,
    points: np.ndarray,
    f_points: np.ndarray,
    nodes: np.ndarray,
    f_nodes: np.ndarray,
    space: MetricMeasureSpace,
) -> np.ndarray:
    step = max(1, CHUNK_ENTRIES // max(nodes.shape[0], 1))
    blocks = []
    for start in range(0, points.shape[0], step):
        stop = min(points.shape[0], start + step)
        w = kernel_matrix(k, points[start:stop], nodes, space)
        try:
            blocks.append(mpnn_layer_step(layer, w, f_points[start:stop], f_nodes, row_offset=start))
        except IsolatedNodeError as e:
            raise DegenerateDegreeError(point=points[e.node].tolist()) from e
    return np.vstack(blocks)


def _forward(
    net: MPNNSpec,
    k: Kernel,
    s: Signal,
    quad: QuadratureSpec,
    space: MetricMeasureSpace,
    eval_points: np.ndarray | None,
) -> np.ndarray:
    _require_pointwise(s)
    nodes = quadrature_nodes(quad, space)
    f_nodes = s.evaluate(nodes)
    f_eval = s.evaluate(eval_points) if eval_points is not None else None
    for layer in net.layers:
        nxt = _continuous_layer(layer, k, nodes, f_nodes, nodes, f_nodes, space)
        if eval_points is not None and f_eval is not None:
            f_eval = _continuous_layer(layer, k, eval_points, f_eval, nodes, f_nodes, space)
        f_nodes = nxt
    return f_nodes if f_eval is None else f_eval


def cmpnn_forward(
    net: MPNNSpec,
    k: Kernel,
    s: Signal,
    eval_points: Any,
    quad: QuadratureSpec,
    space: MetricMeasureSpace = UNIT_SQUARE,
) -> np.ndarray:
    """Theta_W(f) at `eval_points`, one row per point."""
    pts = as_points(space, eval_points)
    if pts.shape[0] == 0:
        _require_pointwise(s)
        return np.zeros((0, net.output_dim))
    return _forward(net, k, s, quad, space, pts)


def cmpnn_pool(
    net: MPNNSpec,
    k: Kernel,
    s: Signal,
    quad: QuadratureSpec,
    space: MetricMeasureSpace = UNIT_SQUARE,
) -> np.ndarray:
    return global_pool(_forward(net, k, s, quad, space, None))


class ReferenceCache:
    """Write-once store of gMPNN outputs keyed weakly by (graph, network)."""

    def __init__(self) -> None:
        self._store: weakref.WeakKeyDictionary[SampledGraph, weakref.WeakKeyDictionary[MPNNSpec, np.ndarray]]
        self._store = weakref.WeakKeyDictionary()
        self._lock = threading.Lock()

    def get(self, net: MPNNSpec, parent: SampledGraph) -> np.ndarray:
        with self._lock:
            hit = self._store.get(parent, {}).get(net)
        if hit is not None:
            return hit
        out = np.asarray(gmpnn_forward(net, parent))
        out.setflags(write=False)
        with self._lock:
            per_graph = self._store.setdefault(parent, weakref.WeakKeyDictionary())
            return per_graph.setdefault(net, out)

    def __contains__(self, key: tuple[MPNNSpec, SampledGraph]) -> bool:
        net, parent = key
        with self._lock:
            return net in self._store.get(parent, {})

    def clear(self) -> None:
        with self._lock:
            self._store.clear()


_REFERENCES = ReferenceCache()


def reference_from_large_graph(
    net: MPNNSpec,
    parent: SampledGraph,
    cache: ReferenceCache | None = None,
) -> np.ndarray:
    return (cache or _REFERENCES).get(net, parent)
