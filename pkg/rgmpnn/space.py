# Role: 距離付き確率空間 (χ, d, P) を表し、一様サンプリングと距離計算を提供する。
# How: 組み込み空間は単位正方形と単位区間のみ。点は `(n, coord_dim)` の numpy 配列で扱い、距離は Euclid 距離（scipy の cdist）。
# Key functions: `sample_points()`, `distance()`, `pairwise_distances()`, `grid_points()`
# Collaboration: kernels がグラフ生成と次数計算に、quadrature が求積ノード生成に使う。
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InvalidArgumentError
from .seeds import rng_from


class SpaceKind(str, Enum):
    UNIT_SQUARE = "unit_square"
    UNIT_INTERVAL = "unit_interval"


@dataclass(frozen=True)
class MetricMeasureSpace:
    kind: SpaceKind
    coord_dim: int
    minkowski_dim: float
    # Reported as 1 even though the Euclidean diameter of [0,1]^2 is sqrt(2).
    diameter: float = 1.0

    def __post_init__(self) -> None:
        if self.coord_dim < 1:
            raise InvalidArgumentError("coord_dim must be positive")
        if not self.minkowski_dim > 0:
            raise InvalidArgumentError("minkowski_dim must be > 0")
        if not 0 < self.diameter <= 1:
            raise InvalidArgumentError("diameter must lie in (0, 1]")


UNIT_SQUARE = MetricMeasureSpace(SpaceKind.UNIT_SQUARE, coord_dim=2, minkowski_dim=2.0)
UNIT_INTERVAL = MetricMeasureSpace(SpaceKind.UNIT_INTERVAL, coord_dim=1, minkowski_dim=1.0)


def space_from_name(name: str) -> MetricMeasureSpace:
    key = str(name).strip().lower()
    if key in {"unit_square", "square"}:
        return UNIT_SQUARE
    if key in {"unit_interval", "interval"}:
        return UNIT_INTERVAL
    raise InvalidArgumentError(f"unknown space '{name}'")


def as_points(space: MetricMeasureSpace, points: object) -> np.ndarray:
    """Coerce one point or a list of points to a `(n, coord_dim)` float array."""
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1) if arr.size else arr.reshape(0, space.coord_dim)
    if arr.ndim != 2 or arr.shape[1] != space.coord_dim:
        raise InvalidArgumentError(
            f"points must have {space.coord_dim} coordinates, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError("point coordinates must be finite")
    return arr


def sample_points(space: MetricMeasureSpace, n: int, seed: int) -> np.ndarray:
    if int(n) < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n}")
    rng = rng_from(seed)
    return rng.random((int(n), space.coord_dim))


def distance(space: MetricMeasureSpace, x: object, y: object) -> float:
    a = as_points(space, x)
    b = as_points(space, y)
    if a.shape[0] != 1 or b.shape[0] != 1:
        raise InvalidArgumentError("distance expects single points")
    return float(cdist(a, b)[0, 0])


def pairwise_distances(space: MetricMeasureSpace, xs: object, ys: object) -> np.ndarray:
    return cdist(as_points(space, xs), as_points(space, ys))


def grid_points(space: MetricMeasureSpace, resolution: int) -> np.ndarray:
    """Corner-inclusive lattice with `resolution` points per axis."""
    if int(resolution) < 2:
        raise InvalidArgumentError("grid resolution must be >= 2")
    axis = np.linspace(0.0, 1.0, int(resolution))
    if space.coord_dim == 1:
        return axis.reshape(-1, 1)
    mesh = np.meshgrid(*([axis] * space.coord_dim), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)
