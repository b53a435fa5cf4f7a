# Role: 距離空間上の信号 f: χ → R^F（閉形式・帯域制限格子・ノード毎ノイズ）と、その正則性メタデータを定義する。
# How: `Signal` に評価関数/格子値/ノイズ幅を持たせ、点評価できない PerNodeNoise はサンプル時にだけ値を生成する。
# Key functions: `eval_signal()`, `make_signal()`, `make_bandlimited()`, `draw_node_features()`
# Collaboration: kernels.sample_graph がノード特徴量を作り、cmpnn/metrics が点評価し、bounds が sup/Lipschitz 定数を読む。
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable

import numpy as np

from .errors import InvalidArgumentError, UnsupportedSignalError
from .seeds import rng_from

BANDLIMITED_RESOLUTION = 256
BANDLIMITED_BAND = 20
SIGNAL_KINDS = ("product", "sum", "bandlimited", "noise", "constant", "coordinate")


class SignalKind(str, Enum):
    CLOSED_FORM = "closed_form"
    GRID_BANDLIMITED = "bandlimited"
    PER_NODE_NOISE = "noise"


@dataclass(frozen=True, eq=False)
class Signal:
    kind: SignalKind
    name: str
    output_dim: int
    sup_f: float
    lip_f: float
    fn: Callable[[np.ndarray], np.ndarray] | None = None
    grid: np.ndarray | None = None
    sigma: float = 1.0

    def __post_init__(self) -> None:
        if self.output_dim < 1:
            raise InvalidArgumentError("signal output_dim must be positive")
        if self.kind == SignalKind.CLOSED_FORM and self.fn is None:
            raise InvalidArgumentError("closed-form signal needs an evaluation function")
        if self.kind == SignalKind.GRID_BANDLIMITED:
            if self.grid is None or self.grid.ndim != 2:
                raise InvalidArgumentError("band-limited signal needs a 2-d value grid")
            if not np.all(np.isfinite(self.grid)):
                raise InvalidArgumentError("band-limited grid values must be finite")
        if self.kind == SignalKind.PER_NODE_NOISE and not self.sigma > 0:
            raise InvalidArgumentError("noise sigma must be > 0")

    @property
    def point_evaluable(self) -> bool:
        return self.kind != SignalKind.PER_NODE_NOISE

    @property
    def lipschitz(self) -> bool:
        return math.isfinite(self.lip_f) and math.isfinite(self.sup_f)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Row-wise evaluation on a `(n, dim)` array; returns `(n, output_dim)`."""
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2:
            raise InvalidArgumentError(f"points must be a 2-d array, got shape {pts.shape}")
        if self.kind == SignalKind.PER_NODE_NOISE:
            raise UnsupportedSignalError(kind=self.name)
        if self.kind == SignalKind.GRID_BANDLIMITED:
            assert self.grid is not None
            if pts.shape[1] != 2:
                raise UnsupportedSignalError(kind=self.name, reason="defined on the unit square only")
            res0, res1 = self.grid.shape
            i0 = np.clip(np.floor(pts[:, 0] * res0).astype(np.int64), 0, res0 - 1)
            i1 = np.clip(np.floor(pts[:, 1] * res1).astype(np.int64), 0, res1 - 1)
            return self.grid[i0, i1].reshape(-1, 1)
        assert self.fn is not None
        out = np.asarray(self.fn(pts), dtype=np.float64)
        if out.ndim == 1:
            out = out.reshape(-1, 1)
        if out.shape != (pts.shape[0], self.output_dim):
            raise InvalidArgumentError(
                f"signal '{self.name}' returned shape {out.shape}, expected {(pts.shape[0], self.output_dim)}"
            )
        return out


def eval_signal(s: Signal, x: Any) -> np.ndarray:
    pt = np.asarray(x, dtype=np.float64).reshape(1, -1)
    return s.evaluate(pt)[0]


def _product(points: np.ndarray) -> np.ndarray:
    if points.shape[1] != 2:
        raise UnsupportedSignalError(kind="product", reason="defined on the unit square only")
    return (points[:, 0] * points[:, 1]).reshape(-1, 1)


def _sum(points: np.ndarray) -> np.ndarray:
    if points.shape[1] != 2:
        raise UnsupportedSignalError(kind="sum", reason="defined on the unit square only")
    return (points[:, 0] + points[:, 1]).reshape(-1, 1)


def product_signal() -> Signal:
    # |grad(x1*x2)| = |(x2, x1)| <= sqrt(2) on the unit square
    return Signal(SignalKind.CLOSED_FORM, "product", 1, sup_f=1.0, lip_f=math.sqrt(2.0), fn=_product)


def sum_signal() -> Signal:
    return Signal(SignalKind.CLOSED_FORM, "sum", 1, sup_f=2.0, lip_f=math.sqrt(2.0), fn=_sum)


def constant_signal(value: float | list[float]) -> Signal:
    vec = np.atleast_1d(np.asarray(value, dtype=np.float64))

    def _const(points: np.ndarray) -> np.ndarray:
        return np.tile(vec, (points.shape[0], 1))

    return Signal(
        SignalKind.CLOSED_FORM,
        "constant",
        int(vec.size),
        sup_f=float(np.max(np.abs(vec))),
        lip_f=0.0,
        fn=_const,
    )


def coordinate_signal(axis: int) -> Signal:
    k = int(axis)

    def _coord(points: np.ndarray) -> np.ndarray:
        if k >= points.shape[1]:
            raise UnsupportedSignalError(kind=f"coordinate[{k}]", reason="out of range for this space")
        return points[:, k].reshape(-1, 1)

    return Signal(SignalKind.CLOSED_FORM, f"coordinate{k}", 1, sup_f=1.0, lip_f=1.0, fn=_coord)


def closed_form(
    fn: Callable[[np.ndarray], np.ndarray],
    *,
    sup_f: float,
    lip_f: float,
    output_dim: int = 1,
    name: str = "custom",
) -> Signal:
    return Signal(SignalKind.CLOSED_FORM, name, int(output_dim), sup_f=float(sup_f), lip_f=float(lip_f), fn=fn)


def make_bandlimited(
    seed: int,
    *,
    resolution: int = BANDLIMITED_RESOLUTION,
    band: int = BANDLIMITED_BAND,
) -> Signal:
    if band < 1 or band > resolution:
        raise InvalidArgumentError("band must lie in [1, resolution]")
    rng = rng_from(seed)
    coeffs = np.zeros((resolution, resolution), dtype=np.complex128)
    coeffs[:band, :band] = rng.standard_normal((band, band)) + 1j * rng.standard_normal((band, band))
    values = np.fft.ifft2(coeffs).real
    values = values / np.max(np.abs(values))
    values.setflags(write=False)
    jump = max(
        float(np.max(np.abs(np.diff(values, axis=0)))),
        float(np.max(np.abs(np.diff(values, axis=1)))),
    )
    return Signal(
        SignalKind.GRID_BANDLIMITED,
        "bandlimited",
        1,
        sup_f=1.0,
        lip_f=jump * resolution,
        grid=values,
    )


def noise_signal(sigma: float = 1.0, output_dim: int = 1) -> Signal:
    return Signal(
        SignalKind.PER_NODE_NOISE,
        "noise",
        int(output_dim),
        sup_f=math.inf,
        lip_f=math.inf,
        sigma=float(sigma),
    )


def make_signal(kind: str, seed: int = 0, **params: Any) -> Signal:
    key = str(kind).strip().lower()
    if key == "product":
        return product_signal()
    if key == "sum":
        return sum_signal()
    if key == "bandlimited":
        return make_bandlimited(
            seed,
            resolution=int(params.get("resolution", BANDLIMITED_RESOLUTION)),
            band=int(params.get("band", BANDLIMITED_BAND)),
        )
    if key == "noise":
        return noise_signal(float(params.get("sigma", 1.0)))
    if key == "constant":
        return constant_signal(params.get("value", 1.0))
    if key == "coordinate":
        return coordinate_signal(int(params.get("axis", 0)))
    raise InvalidArgumentError(f"unknown signal kind '{kind}'")


def draw_node_features(s: Signal, nodes: np.ndarray, seed: int) -> np.ndarray:
    """Features for sampled nodes; noise is drawn fresh per node from `seed`."""
    if s.kind == SignalKind.PER_NODE_NOISE:
        rng = rng_from(seed)
        return rng.normal(0.0, s.sigma, size=(nodes.shape[0], s.output_dim))
    return s.evaluate(nodes)
