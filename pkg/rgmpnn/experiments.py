# Role: 収束実験（サブサンプルしたグラフの出力を大きなグラフの出力と比べる）、2グラフ安定性、次数集中、上界の健全性チェックを実行する。
# How: 試行ごとにマスターシードからサブシードを導出して独立に実行し、ThreadPoolExecutor で並列化したうえで試行番号順に集約する（完了順に依存しない）。
# Key functions: `run_convergence()`, `run_stability_pair()`, `run_degree_concentration()`, `run_bound_soundness()`, `run_trials()`
# Collaboration: kernels/mpnn/cmpnn/metrics/bounds を組み合わせ、cli が結果を CSV/SVG/JSON に書き出す。
from __future__ import annotations

import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence, TypeVar

import numpy as np

from .bounds import (
    BoundResult,
    TwoGraphBound,
    min_nodes,
    pooled_bound,
    signal_regularity,
    two_graph_bound,
)
from .cmpnn import ReferenceCache, cmpnn_pool, reference_from_large_graph
from .errors import InvalidArgumentError, NonLipschitzKernelError, NonLipschitzSignalError, PreconditionError
from .kernels import (
    Kernel,
    RandomGraphModel,
    kernel_from_dict,
    kernel_matrix,
    regularity_profile,
    sample_graph,
    subsample_graph,
)
from .metrics import dist_pooled, dist_x, fit_loglog_slope
from .mpnn import (
    MPNNLayer,
    MPNNSpec,
    global_pool,
    gmpnn_forward,
    graphsage_random,
    layer_constants,
    message_selector,
)
from .quadrature import QuadratureSpec
from .seeds import STREAM_NETWORK, STREAM_PAIR, STREAM_SIGNAL, STREAM_SUBSAMPLE, STREAM_TRIAL, derive_seed
from .signals import Signal, make_signal
from .space import UNIT_SQUARE, MetricMeasureSpace, sample_points, space_from_name

T = TypeVar("T")

# kernel entries per row block when only degrees are needed
DEGREE_BLOCK = 1 << 22


def _log(tag: str, msg: str) -> None:
    print(f"[{tag}] {msg}", file=sys.stderr)


def run_trials(fn: Callable[[int], T], trials: int, threads: int = 1) -> list[T]:
    """fn(0..trials-1), results in trial order whatever the completion order."""
    if trials < 1:
        raise InvalidArgumentError("trials must be >= 1")
    if threads <= 1:
        return [fn(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(trials)))


def _diagnostic(command: str, trial: int, seed: int, exc: BaseException | None = None, **extra: Any) -> dict[str, Any]:
    out: dict[str, Any] = {"command": command, "trial": trial, "seed": seed, "status": "ok" if exc is None else "aborted"}
    if exc is not None:
        out["error"] = f"{type(exc).__name__}: {exc}"
    out.update(extra)
    return out


def mean_aggregation_net(dim: int = 1, depth: int = 1) -> MPNNSpec:
    """Phi(a, b) = b and Psi(a, m) = m: each layer replaces features by their weighted neighbor mean."""
    layers = tuple(MPNNLayer(phi=message_selector(dim), psi=message_selector(dim)) for _ in range(depth))
    return MPNNSpec(layers)


NETWORK_KINDS = ("graphsage", "mean")


def build_network(kind: str, dims: Sequence[int], seed: int, init_scale: float = 1.0) -> MPNNSpec:
    key = str(kind).strip().lower()
    if key == "graphsage":
        return graphsage_random(list(dims), derive_seed(seed, STREAM_NETWORK), init_scale)
    if key == "mean":
        return mean_aggregation_net(int(dims[0]), len(dims) - 1)
    raise InvalidArgumentError(f"unknown network kind '{kind}'")


# --- convergence -----------------------------------------------------------------------------


def _default_sizes() -> list[int]:
    return [2**k for k in range(5, 12)]


@dataclass
class ConvergenceConfig:
    kernel: str = "ball"
    radii: list[float] = field(default_factory=lambda: [0.1, 0.5, 0.9])
    delta: float = 0.05
    c: float = 1.0
    signals: list[str] = field(default_factory=lambda: ["product"])
    reference_n: int = 2**12
    sizes: list[int] = field(default_factory=_default_sizes)
    trials: int = 10
    network: str = "graphsage"
    dims: list[int] = field(default_factory=lambda: [1, 16, 1])
    init_scale: float = 1.0
    fit_min_n: int = 32
    space: str = "unit_square"
    seed: int = 0
    threads: int = 1

    def validate(self) -> None:
        if not self.sizes or any(b <= a for a, b in zip(self.sizes[:-1], self.sizes[1:])):
            raise InvalidArgumentError("sizes must be nonempty and strictly increasing")
        if self.sizes[0] < 1 or self.sizes[-1] > self.reference_n:
            raise InvalidArgumentError("sizes must lie in [1, reference_n]")
        if self.trials < 1:
            raise InvalidArgumentError("trials must be >= 1")
        if not self.signals:
            raise InvalidArgumentError("at least one signal is required")
        if self.kernel != "constant" and not self.radii:
            raise InvalidArgumentError("at least one radius is required")

    def kernels(self) -> list[tuple[float, Kernel]]:
        """(radius label, kernel) pairs; the constant kernel carries the label 0.0."""
        if self.kernel == "constant":
            return [(0.0, Kernel.constant(self.c))]
        if self.kernel == "ball":
            return [(float(r), Kernel.ball(r)) for r in self.radii]
        if self.kernel == "smoothed_ball":
            return [(float(r), Kernel.smoothed_ball(r, min(self.delta, r))) for r in self.radii]
        raise InvalidArgumentError(f"unknown kernel kind '{self.kernel}'")


@dataclass(frozen=True)
class ConvergenceRow:
    r: float
    signal: str
    trial: int
    n: int
    dist_node: float
    dist_pooled: float


@dataclass(frozen=True)
class MeanRow:
    r: float
    signal: str
    n: int
    mean_node: float
    mean_pooled: float
    trials: int


@dataclass(frozen=True)
class SlopeRow:
    r: float
    signal: str
    metric: str
    slope: float
    intercept: float
    residual: float


@dataclass
class ExperimentResult:
    rows: list[ConvergenceRow]
    means: list[MeanRow]
    slopes: list[SlopeRow]
    diagnostics: list[dict[str, Any]]

    def mean(self, r: float, signal: str, n: int) -> MeanRow:
        for row in self.means:
            if row.r == r and row.signal == signal and row.n == n:
                return row
        raise KeyError((r, signal, n))

    def slope(self, r: float, signal: str, metric: str = "node") -> SlopeRow:
        for row in self.slopes:
            if row.r == r and row.signal == signal and row.metric == metric:
                return row
        raise KeyError((r, signal, metric))


def _convergence_trial(
    cfg: ConvergenceConfig,
    r: float,
    kernel: Kernel,
    signal: Signal,
    net: MPNNSpec,
    space: MetricMeasureSpace,
    trial: int,
) -> tuple[list[ConvergenceRow], dict[str, Any]]:
    tseed = derive_seed(cfg.seed, STREAM_TRIAL, trial)
    try:
        parent = sample_graph(RandomGraphModel(kernel, signal, space), cfg.reference_n, tseed)
        # trial-local cache: the parent graph dies with the trial
        ref = reference_from_large_graph(net, parent, ReferenceCache())
        ref_pool = global_pool(ref)
        rows = []
        for size in cfg.sizes:
            sub, idx = subsample_graph(parent, size, derive_seed(tseed, STREAM_SUBSAMPLE, size))
            out = gmpnn_forward(net, sub)
            rows.append(
                ConvergenceRow(
                    r=r,
                    signal=signal.name,
                    trial=trial,
                    n=int(size),
                    dist_node=dist_x(out, ref[idx]),
                    dist_pooled=dist_pooled(global_pool(out), ref_pool),
                )
            )
    except PreconditionError as e:
        _log("convergence", f"r={r} {signal.name} trial {trial + 1}/{cfg.trials} aborted: {e}")
        return [], _diagnostic("convergence", trial, tseed, e, r=r, signal=signal.name)
    _log("convergence", f"r={r} {signal.name} trial {trial + 1}/{cfg.trials} done")
    return rows, _diagnostic("convergence", trial, tseed, r=r, signal=signal.name)


def _fit_slopes(cfg: ConvergenceConfig, means: list[MeanRow], diagnostics: list[dict[str, Any]]) -> list[SlopeRow]:
    slopes = []
    keys = list(dict.fromkeys((m.r, m.signal) for m in means))
    for r, name in keys:
        pts = [m for m in means if m.r == r and m.signal == name and m.n >= cfg.fit_min_n]
        for metric in ("node", "pooled"):
            used = [(m.n, m.mean_node if metric == "node" else m.mean_pooled) for m in pts]
            used = [(n, e) for n, e in used if e > 0]
            if len(used) < 2:
                diagnostics.append(
                    {"command": "convergence", "status": "no-fit", "r": r, "signal": name, "metric": metric}
                )
                continue
            fit = fit_loglog_slope([n for n, _ in used], [e for _, e in used])
            slopes.append(SlopeRow(r, name, metric, fit.slope, fit.intercept, fit.residual))
    return slopes


def run_convergence(cfg: ConvergenceConfig) -> ExperimentResult:
    cfg.validate()
    space = space_from_name(cfg.space)
    net = build_network(cfg.network, cfg.dims, cfg.seed, cfg.init_scale)
    signals = [make_signal(name, derive_seed(cfg.seed, STREAM_SIGNAL)) for name in cfg.signals]
    for s in signals:
        if s.output_dim != net.input_dim:
            raise InvalidArgumentError(f"signal '{s.name}' has dim {s.output_dim}, network expects {net.input_dim}")
    rows: list[ConvergenceRow] = []
    means: list[MeanRow] = []
    diagnostics: list[dict[str, Any]] = []
    for r, kernel in cfg.kernels():
        for signal in signals:
            results = run_trials(
                lambda t: _convergence_trial(cfg, r, kernel, signal, net, space, t),
                cfg.trials,
                cfg.threads,
            )
            block = [row for trial_rows, _ in results for row in trial_rows]
            diagnostics.extend(d for _, d in results)
            rows.extend(block)
            for size in cfg.sizes:
                at = [row for row in block if row.n == size]
                if not at:
                    continue
                means.append(
                    MeanRow(
                        r=r,
                        signal=signal.name,
                        n=int(size),
                        mean_node=float(np.mean([row.dist_node for row in at])),
                        mean_pooled=float(np.mean([row.dist_pooled for row in at])),
                        trials=len(at),
                    )
                )
    slopes = _fit_slopes(cfg, means, diagnostics)
    for s in slopes:
        _log("convergence", f"r={s.r} {s.signal} {s.metric}: slope={s.slope:.3f}")
    return ExperimentResult(rows, means, slopes, diagnostics)


# --- two-graph stability -------------------------------------------------------------------------


@dataclass(frozen=True)
class StabilityRow:
    trial: int
    n: int
    n_prime: int
    dist_pooled: float


@dataclass
class StabilityResult:
    rows: list[StabilityRow]
    bound: TwoGraphBound | None
    bound_status: str
    diagnostics: list[dict[str, Any]]

    @property
    def distances(self) -> np.ndarray:
        return np.array([row.dist_pooled for row in self.rows], dtype=np.float64)

    @property
    def mean(self) -> float:
        return float(np.mean(self.distances)) if self.rows else math.nan

    @property
    def max(self) -> float:
        return float(np.max(self.distances)) if self.rows else math.nan

    def summary(self) -> dict[str, Any]:
        return {
            "trials": len(self.rows),
            "mean": self.mean,
            "std": float(np.std(self.distances)) if self.rows else math.nan,
            "max": self.max,
            "bound": None if self.bound is None else self.bound.to_dict(),
            "bound_status": self.bound_status,
        }


def run_stability_pair(
    kernel: Kernel,
    signal: Signal,
    net: MPNNSpec,
    n: int,
    n_prime: int,
    trials: int,
    seed: int,
    *,
    p: float | None = None,
    space: MetricMeasureSpace = UNIT_SQUARE,
    dudley_c: float = 1.0,
    seed_prime: int | None = None,
    threads: int = 1,
) -> StabilityResult:
    """Pooled distances between independent graphs of sizes n and n_prime; seed_prime reuses the first graph's stream."""
    if int(n) < 1 or int(n_prime) < 1:
        raise InvalidArgumentError("graph sizes must be >= 1")
    bound: TwoGraphBound | None = None
    status = "not requested"
    if p is not None:
        try:
            profile = regularity_profile(kernel, space, dudley_c)
            bound = two_graph_bound(
                int(n), int(n_prime), p, layer_constants(net), profile, signal_regularity(signal)
            )
            status = "ok"
        except (NonLipschitzKernelError, NonLipschitzSignalError) as e:
            status = f"unavailable: {e}"
            _log("stability", f"bound {status}")
    model = RandomGraphModel(kernel, signal, space)

    def _trial(t: int) -> tuple[StabilityRow | None, dict[str, Any]]:
        s1 = derive_seed(seed, STREAM_PAIR, t, 0)
        s2 = derive_seed(seed, STREAM_PAIR, t, 1) if seed_prime is None else derive_seed(seed_prime, STREAM_PAIR, t, 0)
        try:
            g1 = sample_graph(model, int(n), s1)
            g2 = sample_graph(model, int(n_prime), s2)
            d = dist_pooled(global_pool(gmpnn_forward(net, g1)), global_pool(gmpnn_forward(net, g2)))
        except PreconditionError as e:
            return None, _diagnostic("stability", t, s1, e)
        return StabilityRow(t, int(n), int(n_prime), d), _diagnostic("stability", t, s1)

    results = run_trials(_trial, trials, threads)
    rows = [row for row, _ in results if row is not None]
    _log("stability", f"N={n} N'={n_prime}: {len(rows)}/{trials} trials")
    return StabilityResult(rows, bound, status, [d for _, d in results])


# --- degree concentration --------------------------------------------------------------------------


@dataclass(frozen=True)
class DegreeRow:
    trial: int
    n: int
    min_degree: float
    half_dmin: float
    ok: bool


@dataclass
class DegreeConcentrationResult:
    rows: list[DegreeRow]
    n: int
    min_n: int
    d_min: float
    p: float

    @property
    def meets_min_n(self) -> bool:
        return self.n >= self.min_n

    @property
    def fraction(self) -> float:
        return sum(row.ok for row in self.rows) / len(self.rows)

    def summary(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "min_n": self.min_n,
            "meets_min_n": self.meets_min_n,
            "d_min": self.d_min,
            "p": self.p,
            "trials": len(self.rows),
            "fraction": self.fraction,
        }


def node_degrees(k: Kernel, nodes: np.ndarray, space: MetricMeasureSpace = UNIT_SQUARE) -> np.ndarray:
    """d_X(X_i) for every node without holding the full weight matrix."""
    n = nodes.shape[0]
    step = max(1, DEGREE_BLOCK // max(n, 1))
    out = np.empty(n)
    for start in range(0, n, step):
        stop = min(n, start + step)
        out[start:stop] = kernel_matrix(k, nodes[start:stop], nodes, space).sum(axis=1) / n
    return out


def run_degree_concentration(
    kernel: Kernel,
    space: MetricMeasureSpace = UNIT_SQUARE,
    p: float = 0.05,
    trials: int = 200,
    seed: int = 0,
    n: int | None = None,
    *,
    dudley_c: float = 1.0,
    grid_res: int = 21,
    threads: int = 1,
) -> DegreeConcentrationResult:
    """Fraction of trials whose minimum node degree stays >= d_min/2; n defaults to min_nodes(p)."""
    profile = regularity_profile(kernel, space, dudley_c, grid_res)
    required = min_nodes(profile, p)
    size = required if n is None else int(n)
    if size < 1:
        raise InvalidArgumentError("n must be >= 1")
    if size < required:
        _log("degrees", f"n={size} is below the minimum node count {required}")
    half = profile.d_min / 2.0

    def _trial(t: int) -> DegreeRow:
        pts = sample_points(space, size, derive_seed(seed, STREAM_TRIAL, t))
        low = float(np.min(node_degrees(kernel, pts, space)))
        return DegreeRow(t, size, low, half, low >= half)

    rows = run_trials(_trial, trials, threads)
    result = DegreeConcentrationResult(rows, size, required, profile.d_min, p)
    _log("degrees", f"{sum(r.ok for r in rows)}/{trials} trials with min degree >= d_min/2")
    return result


# --- bound soundness -------------------------------------------------------------------------------


@dataclass
class SoundnessConfig:
    kernel: dict[str, Any] = field(default_factory=lambda: {"kind": "constant", "c": 1.0})
    signal: str = "product"
    network: str = "mean"
    dims: list[int] = field(default_factory=lambda: [1, 1])
    init_scale: float = 1.0
    p: float = 0.01
    n: int | None = None
    proxy: str = "large_graph"
    proxy_n: int = 2**12
    quad_resolution: int = 64
    trials: int = 200
    dudley_c: float = 1.0
    space: str = "unit_square"
    seed: int = 0
    threads: int = 1


@dataclass(frozen=True)
class SoundnessRow:
    trial: int
    n: int
    dist_pooled: float
    bound: float
    dominated: bool


@dataclass
class SoundnessResult:
    rows: list[SoundnessRow]
    bound: BoundResult
    proxy: str

    @property
    def dominated(self) -> int:
        return sum(row.dominated for row in self.rows)

    def summary(self) -> dict[str, Any]:
        return {
            "trials": len(self.rows),
            "dominated": self.dominated,
            "n": self.bound.n,
            "min_n": self.bound.min_n,
            "bound": self.bound.to_dict(),
            "proxy": self.proxy,
            "max_dist": max(row.dist_pooled for row in self.rows),
        }


def run_bound_soundness(cfg: SoundnessConfig) -> SoundnessResult:
    space = space_from_name(cfg.space)
    kernel = kernel_from_dict(cfg.kernel)
    signal = make_signal(cfg.signal, derive_seed(cfg.seed, STREAM_SIGNAL))
    net = build_network(cfg.network, cfg.dims, cfg.seed, cfg.init_scale)
    profile = regularity_profile(kernel, space, cfg.dudley_c)
    required = min_nodes(profile, cfg.p)
    n = max(required, 2**10) if cfg.n is None else int(cfg.n)
    bound = pooled_bound(n, cfg.p, layer_constants(net), profile, signal_regularity(signal))
    model = RandomGraphModel(kernel, signal, space)
    if cfg.proxy == "large_graph":
        proxy_graph = sample_graph(model, cfg.proxy_n, derive_seed(cfg.seed, STREAM_PAIR))
        target = global_pool(gmpnn_forward(net, proxy_graph))
    elif cfg.proxy == "quadrature":
        target = cmpnn_pool(net, kernel, signal, QuadratureSpec.grid(cfg.quad_resolution), space)
    else:
        raise InvalidArgumentError(f"unknown proxy '{cfg.proxy}'")

    def _trial(t: int) -> SoundnessRow:
        g = sample_graph(model, n, derive_seed(cfg.seed, STREAM_TRIAL, t))
        d = dist_pooled(global_pool(gmpnn_forward(net, g)), target)
        return SoundnessRow(t, n, d, bound.value, d <= bound.value)

    rows = run_trials(_trial, cfg.trials, cfg.threads)
    result = SoundnessResult(rows, bound, cfg.proxy)
    _log("soundness", f"{result.dominated}/{cfg.trials} trials dominated (N={n}, bound={bound.value:.4g})")
    return result
