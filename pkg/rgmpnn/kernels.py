# Role: カーネル W: χ×χ → [0,∞) とその次数 d_W、正則性プロファイル、ランダムグラフ (G, f) ~ (W, f) の生成を提供する。
# How: 距離の関数としてカーネルを評価し、単位正方形では円と正方形の交差面積を閉形式で積分して厳密な次数を出す。N > 4096 の球カーネルは cKDTree + CSR で疎に持つ。
# Key functions: `eval_kernel()`, `kernel_degree()`, `estimate_dmin()`, `empirical_degree()`, `sample_graph()`, `subsample_graph()`, `regularity_profile()`
# Collaboration: mpnn/cmpnn が重み行列を、bounds が `RegularityProfile` を、experiments がサンプリングとサブサンプリングを使う。
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
from scipy import integrate, sparse
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .errors import InvalidArgumentError
from .quadrature import QuadratureSpec, quadrature_nodes
from .seeds import STREAM_FEATURES, STREAM_POSITIONS, derive_seed, rng_from
from .signals import Signal, draw_node_features
from .space import (
    UNIT_INTERVAL,
    UNIT_SQUARE,
    MetricMeasureSpace,
    SpaceKind,
    as_points,
    grid_points,
    pairwise_distances,
    sample_points,
    space_from_name,
)

DENSE_LIMIT = 4096
DEFAULT_DMIN_GRID = 21


class KernelKind(str, Enum):
    CONSTANT = "constant"
    BALL_INDICATOR = "ball"
    SMOOTHED_BALL = "smoothed_ball"


@dataclass(frozen=True)
class Kernel:
    kind: KernelKind
    c: float = 1.0
    r: float = 0.0
    delta: float = 0.0

    def __post_init__(self) -> None:
        if self.kind == KernelKind.CONSTANT:
            if not self.c > 0:
                raise InvalidArgumentError("Constant kernel needs c > 0")
        elif self.kind == KernelKind.BALL_INDICATOR:
            if not self.r > 0:
                raise InvalidArgumentError("BallIndicator kernel needs r > 0")
        elif self.kind == KernelKind.SMOOTHED_BALL:
            if not (self.r > 0 and self.delta > 0):
                raise InvalidArgumentError("SmoothedBall kernel needs r > 0 and delta > 0")
            if self.delta > self.r:
                raise InvalidArgumentError("SmoothedBall kernel needs delta <= r")

    @classmethod
    def constant(cls, c: float) -> Kernel:
        return cls(KernelKind.CONSTANT, c=float(c))

    @classmethod
    def ball(cls, r: float) -> Kernel:
        return cls(KernelKind.BALL_INDICATOR, r=float(r))

    @classmethod
    def smoothed_ball(cls, r: float, delta: float) -> Kernel:
        return cls(KernelKind.SMOOTHED_BALL, r=float(r), delta=float(delta))

    @property
    def sup_w(self) -> float:
        return self.c if self.kind == KernelKind.CONSTANT else 1.0

    @property
    def lip_w(self) -> float:
        if self.kind == KernelKind.CONSTANT:
            return 0.0
        if self.kind == KernelKind.BALL_INDICATOR:
            return math.inf
        return 1.0 / self.delta

    def from_distance(self, d: np.ndarray) -> np.ndarray:
        d = np.asarray(d, dtype=np.float64)
        if self.kind == KernelKind.CONSTANT:
            return np.full(d.shape, self.c)
        if self.kind == KernelKind.BALL_INDICATOR:
            return (d < self.r).astype(np.float64)
        return np.clip((self.r - d) / self.delta, 0.0, 1.0)

    def to_dict(self) -> dict[str, Any]:
        if self.kind == KernelKind.CONSTANT:
            return {"kind": self.kind.value, "c": self.c}
        if self.kind == KernelKind.BALL_INDICATOR:
            return {"kind": self.kind.value, "r": self.r}
        return {"kind": self.kind.value, "r": self.r, "delta": self.delta}


def kernel_from_dict(data: dict[str, Any]) -> Kernel:
    kind = str(data.get("kind", "")).strip().lower()
    if kind == KernelKind.CONSTANT.value:
        return Kernel.constant(float(data.get("c", 1.0)))
    if kind == KernelKind.BALL_INDICATOR.value:
        return Kernel.ball(float(data["r"]))
    if kind == KernelKind.SMOOTHED_BALL.value:
        return Kernel.smoothed_ball(float(data["r"]), float(data["delta"]))
    raise InvalidArgumentError(f"unknown kernel kind '{kind}'")


def eval_kernel(k: Kernel, x: Any, y: Any) -> float:
    a = np.asarray(x, dtype=np.float64).reshape(1, -1)
    b = np.asarray(y, dtype=np.float64).reshape(1, -1)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    return float(k.from_distance(cdist(a, b))[0, 0])


def kernel_matrix(k: Kernel, xs: np.ndarray, ys: np.ndarray, space: MetricMeasureSpace = UNIT_SQUARE) -> np.ndarray:
    return k.from_distance(pairwise_distances(space, xs, ys))


# --- exact degrees -----------------------------------------------------------


def _chord_antiderivative(u: float, r: float) -> float:
    u = min(max(u, -r), r)
    return 0.5 * (u * math.sqrt(max(r * r - u * u, 0.0)) + r * r * math.asin(u / r))


def disc_square_area(cx: float, cy: float, r: float) -> float:
    """Area of the disc B_r((cx, cy)) inside [0,1]^2, for a center in the square."""
    if r <= 0:
        return 0.0
    lo = max(0.0, cx - r) - cx
    hi = min(1.0, cx + r) - cx
    y0, y1 = -cy, 1.0 - cy
    cuts = {lo, hi}
    for yb in (y0, y1):
        if abs(yb) < r:
            s = math.sqrt(r * r - yb * yb)
            cuts.update((-s, s))
    pts = sorted(c for c in cuts if lo <= c <= hi)
    area = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        if b <= a:
            continue
        mid = 0.5 * (a + b)
        h = math.sqrt(max(r * r - mid * mid, 0.0))
        arc = _chord_antiderivative(b, r) - _chord_antiderivative(a, r)
        area += y1 * (b - a) if y1 < h else arc
        area -= y0 * (b - a) if y0 > -h else -arc
    return area


def _ball_measure(space: MetricMeasureSpace, x: np.ndarray, r: float) -> float:
    if space.kind == SpaceKind.UNIT_INTERVAL:
        return max(0.0, min(1.0, x[0] + r) - max(0.0, x[0] - r))
    return disc_square_area(float(x[0]), float(x[1]), r)


def _exact_degree(k: Kernel, space: MetricMeasureSpace, x: np.ndarray) -> float:
    if k.kind == KernelKind.CONSTANT:
        return k.c
    if k.kind == KernelKind.BALL_INDICATOR:
        return _ball_measure(space, x, k.r)
    # clip((r - d)/delta, 0, 1) = (1/delta) * integral over s in [r - delta, r] of 1[d < s]
    val, _ = integrate.quad(
        lambda s: _ball_measure(space, x, s),
        k.r - k.delta,
        k.r,
        epsabs=1e-13,
        epsrel=1e-11,
        limit=200,
    )
    return val / k.delta


def kernel_degree(
    k: Kernel,
    space: MetricMeasureSpace,
    x: Any,
    quad: QuadratureSpec | None = None,
) -> float:
    """d_W(x); exact when `quad` is None, otherwise the quadrature mean of W(x, .)."""
    pt = as_points(space, x)
    if pt.shape[0] != 1:
        raise InvalidArgumentError("kernel_degree expects a single point")
    if quad is None:
        return _exact_degree(k, space, pt[0])
    nodes = quadrature_nodes(quad, space)
    return float(np.mean(kernel_matrix(k, pt, nodes, space)[0]))


def kernel_degrees(
    k: Kernel,
    space: MetricMeasureSpace,
    points: Any,
    quad: QuadratureSpec | None = None,
) -> np.ndarray:
    pts = as_points(space, points)
    if quad is not None:
        nodes = quadrature_nodes(quad, space)
        return np.mean(kernel_matrix(k, pts, nodes, space), axis=1)
    return np.array([_exact_degree(k, space, p) for p in pts], dtype=np.float64)


def estimate_dmin(k: Kernel, space: MetricMeasureSpace, grid_res: int = DEFAULT_DMIN_GRID) -> float:
    """Minimum of the exact degree over a corner-inclusive grid (an upper estimate of the infimum)."""
    if k.kind == KernelKind.CONSTANT:
        return k.c
    pts = grid_points(space, grid_res)
    # the degree is symmetric under x -> 1 - x per axis, so one orthant of the lattice suffices
    pts = pts[np.all(pts <= 0.5 + 1e-12, axis=1)]
    return float(np.min(kernel_degrees(k, space, pts)))


# --- regularity ---------------------------------------------------------------


def dudley_zeta(dudley_c: float = 1.0) -> float:
    ln2 = math.log(2.0)
    return (2.0 / math.sqrt(2.0)) * math.e * (2.0 / ln2 + 1.0) * (1.0 / math.sqrt(ln2)) * dudley_c


@dataclass(frozen=True)
class RegularityProfile:
    sup_w: float
    lip_w: float
    d_min: float
    dim_chi: float
    zeta: float
    dudley_c: float = 1.0

    def __post_init__(self) -> None:
        if not self.d_min > 0:
            raise InvalidArgumentError("d_min must be > 0")
        if not self.dim_chi > 0:
            raise InvalidArgumentError("dim_chi must be > 0")
        if not (self.zeta > 0 and self.dudley_c > 0):
            raise InvalidArgumentError("zeta and dudley_c must be > 0")
        if self.sup_w < 0 or self.lip_w < 0:
            raise InvalidArgumentError("sup_w and lip_w must be >= 0")
        if self.d_min > self.sup_w * (1.0 + 1e-12):
            raise InvalidArgumentError(f"d_min={self.d_min!r} exceeds sup_w={self.sup_w!r}")

    @property
    def lipschitz(self) -> bool:
        return math.isfinite(self.lip_w)

    def to_dict(self) -> dict[str, Any]:
        return {
            "sup_w": self.sup_w,
            "lip_w": self.lip_w if math.isfinite(self.lip_w) else "inf",
            "d_min": self.d_min,
            "dim_chi": self.dim_chi,
            "zeta": self.zeta,
            "dudley_c": self.dudley_c,
        }


def regularity_profile(
    k: Kernel,
    space: MetricMeasureSpace = UNIT_SQUARE,
    dudley_c: float = 1.0,
    grid_res: int = DEFAULT_DMIN_GRID,
) -> RegularityProfile:
    if not dudley_c > 0:
        raise InvalidArgumentError("dudley_c must be > 0")
    return RegularityProfile(
        sup_w=k.sup_w,
        lip_w=k.lip_w,
        d_min=estimate_dmin(k, space, grid_res),
        dim_chi=space.minkowski_dim,
        zeta=dudley_zeta(dudley_c),
        dudley_c=float(dudley_c),
    )


# --- sampled graphs -------------------------------------------------------------


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


def _row_degrees(weights: np.ndarray | sparse.csr_matrix) -> np.ndarray:
    n = weights.shape[0]
    if sparse.issparse(weights):
        return np.asarray(weights.sum(axis=1)).ravel() / n
    return weights.sum(axis=1) / n


@dataclass(frozen=True, eq=False)
class SampledGraph:
    nodes: np.ndarray
    weights: np.ndarray | sparse.csr_matrix
    features: np.ndarray
    degrees: np.ndarray
    kernel: Kernel
    space: MetricMeasureSpace = field(default=UNIT_SQUARE)

    @property
    def n(self) -> int:
        return int(self.nodes.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.features.shape[1])

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.weights)

    def dense_weights(self) -> np.ndarray:
        return self.weights.toarray() if self.is_sparse else np.asarray(self.weights)


@dataclass(frozen=True)
class RandomGraphModel:
    kernel: Kernel
    signal: Signal
    space: MetricMeasureSpace = UNIT_SQUARE


def _ball_weights_sparse(k: Kernel, nodes: np.ndarray) -> sparse.csr_matrix:
    n = nodes.shape[0]
    pairs = cKDTree(nodes).query_pairs(k.r, output_type="ndarray")
    if pairs.size:
        # query_pairs is closed at r; the indicator is open
        gap = nodes[pairs[:, 0]] - nodes[pairs[:, 1]]
        pairs = pairs[np.sqrt(np.sum(gap * gap, axis=1)) < k.r]
    diag = np.arange(n)
    rows = np.concatenate([pairs[:, 0], pairs[:, 1], diag]) if pairs.size else diag
    cols = np.concatenate([pairs[:, 1], pairs[:, 0], diag]) if pairs.size else diag
    data = np.ones(rows.shape[0], dtype=np.float64)
    mat = sparse.csr_matrix((data, (rows, cols)), shape=(n, n))
    mat.sort_indices()
    return mat


def graph_weights(
    k: Kernel,
    nodes: np.ndarray,
    space: MetricMeasureSpace = UNIT_SQUARE,
) -> np.ndarray | sparse.csr_matrix:
    if k.kind == KernelKind.BALL_INDICATOR and nodes.shape[0] > DENSE_LIMIT:
        return _ball_weights_sparse(k, nodes)
    return kernel_matrix(k, nodes, nodes, space)


def graph_from_nodes(
    k: Kernel,
    nodes: Any,
    features: Any,
    space: MetricMeasureSpace = UNIT_SQUARE,
    *,
    weights: np.ndarray | sparse.csr_matrix | None = None,
) -> SampledGraph:
    pts = as_points(space, nodes)
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim == 1:
        feats = feats.reshape(-1, 1)
    if feats.shape[0] != pts.shape[0]:
        raise InvalidArgumentError(f"{feats.shape[0]} feature rows for {pts.shape[0]} nodes")
    if pts.shape[0] < 1:
        raise InvalidArgumentError("a graph needs at least one node")
    w = graph_weights(k, pts, space) if weights is None else weights
    if not sparse.issparse(w):
        w = _readonly(w)
    return SampledGraph(
        nodes=_readonly(pts),
        weights=w,
        features=_readonly(feats),
        degrees=_readonly(_row_degrees(w)),
        kernel=k,
        space=space,
    )


def sample_graph(model: RandomGraphModel, n: int, seed: int) -> SampledGraph:
    if int(n) < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n}")
    nodes = sample_points(model.space, int(n), derive_seed(seed, STREAM_POSITIONS))
    features = draw_node_features(model.signal, nodes, derive_seed(seed, STREAM_FEATURES))
    return graph_from_nodes(model.kernel, nodes, features, model.space)


def subsample_graph(parent: SampledGraph, m: int, seed: int) -> tuple[SampledGraph, np.ndarray]:
    """Uniform m-subset without replacement; the index map is sorted ascending."""
    m = int(m)
    if m < 1 or m > parent.n:
        raise InvalidArgumentError(f"subsample size {m} must lie in [1, {parent.n}]")
    rng = rng_from(seed)
    idx = np.sort(rng.choice(parent.n, size=m, replace=False))
    if parent.is_sparse:
        w = parent.weights[idx][:, idx]
        w = w.toarray() if m <= DENSE_LIMIT else w.tocsr()
    else:
        w = parent.weights[np.ix_(idx, idx)]
    sub = graph_from_nodes(
        parent.kernel,
        parent.nodes[idx],
        parent.features[idx],
        parent.space,
        weights=w,
    )
    return sub, _readonly(idx)


def empirical_degree(k: Kernel, x: Any, nodes: Any, space: MetricMeasureSpace | None = None) -> float:
    pts = np.asarray(nodes, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise InvalidArgumentError("empirical_degree needs a nonempty node list")
    sp = space or (UNIT_INTERVAL if pts.shape[1] == 1 else UNIT_SQUARE)
    row = kernel_matrix(k, as_points(sp, x), pts, sp)
    return float(row.sum(axis=1)[0] / pts.shape[0])


# --- JSON ------------------------------------------------------------------------


def graph_to_json(g: SampledGraph, reference: np.ndarray | None = None) -> dict[str, Any]:
    coo = sparse.coo_matrix(g.weights)
    order = np.lexsort((coo.col, coo.row))
    edges = [
        [int(i), int(j), float(w)]
        for i, j, w in zip(coo.row[order], coo.col[order], coo.data[order])
        if w != 0.0
    ]
    doc: dict[str, Any] = {
        "nodes": g.nodes.tolist(),
        "edges_coo": edges,
        "features": g.features.tolist(),
        "kernel": g.kernel.to_dict(),
        "space": g.space.kind.value,
    }
    if reference is not None:
        doc["reference"] = np.asarray(reference).tolist()
    return doc


def graph_from_json(
    doc: dict[str, Any],
    kernel: Kernel | None = None,
    space: MetricMeasureSpace | None = None,
) -> SampledGraph:
    k = kernel or kernel_from_dict(doc.get("kernel") or {})
    sp = space or space_from_name(doc.get("space", "unit_square"))
    nodes = as_points(sp, doc["nodes"])
    n = nodes.shape[0]
    edges = np.asarray(doc.get("edges_coo") or [], dtype=np.float64).reshape(-1, 3)
    rows = edges[:, 0].astype(np.int64)
    cols = edges[:, 1].astype(np.int64)
    w = sparse.csr_matrix((edges[:, 2], (rows, cols)), shape=(n, n))
    weights: np.ndarray | sparse.csr_matrix = w if n > DENSE_LIMIT else w.toarray()
    return graph_from_nodes(k, nodes, doc["features"], sp, weights=weights)
