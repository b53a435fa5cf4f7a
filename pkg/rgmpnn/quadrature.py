# Role: 積分 ∫ g dP を近似するための求積ノード（モンテカルロ/格子）を定義する。
# How: `QuadratureSpec` で種類と点数を指定し、一様測度なので重みは全ノード等しい（平均を取るだけ）。
# Key functions: `QuadratureSpec`, `quadrature_nodes()`
# Collaboration: kernels の次数推定と cmpnn の連続集約が同じノード集合を共有するために使う。
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import InvalidArgumentError
from .space import MetricMeasureSpace, sample_points

MONTE_CARLO = "monte_carlo"
GRID = "grid"


@dataclass(frozen=True)
class QuadratureSpec:
    kind: str = MONTE_CARLO
    samples: int = 4096
    seed: int = 0
    resolution: int = 64

    def __post_init__(self) -> None:
        if self.kind not in {MONTE_CARLO, GRID}:
            raise InvalidArgumentError(f"unknown quadrature kind '{self.kind}'")
        if self.kind == MONTE_CARLO and self.samples < 1:
            raise InvalidArgumentError("quadrature samples must be >= 1")
        if self.kind == GRID and self.resolution < 1:
            raise InvalidArgumentError("quadrature resolution must be >= 1")

    @classmethod
    def monte_carlo(cls, samples: int, seed: int) -> QuadratureSpec:
        return cls(kind=MONTE_CARLO, samples=int(samples), seed=int(seed))

    @classmethod
    def grid(cls, resolution: int) -> QuadratureSpec:
        return cls(kind=GRID, resolution=int(resolution))

    def to_dict(self) -> dict[str, Any]:
        if self.kind == GRID:
            return {"kind": GRID, "resolution": self.resolution}
        return {"kind": MONTE_CARLO, "samples": self.samples, "seed": self.seed}


def quadrature_from_dict(data: dict[str, Any]) -> QuadratureSpec:
    kind = str(data.get("kind", MONTE_CARLO)).strip().lower()
    if kind == GRID:
        return QuadratureSpec.grid(int(data.get("resolution", 64)))
    return QuadratureSpec.monte_carlo(int(data.get("samples", 4096)), int(data.get("seed", 0)))


def quadrature_nodes(quad: QuadratureSpec, space: MetricMeasureSpace) -> np.ndarray:
    if quad.kind == MONTE_CARLO:
        return sample_points(space, quad.samples, quad.seed)
    # cell midpoints
    axis = (np.arange(quad.resolution, dtype=np.float64) + 0.5) / quad.resolution
    if space.coord_dim == 1:
        return axis.reshape(-1, 1)
    mesh = np.meshgrid(*([axis] * space.coord_dim), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)
