# Role: ノルム（‖·‖_∞ と ‖·‖_{2;∞}）、サンプリング作用素、ノード単位/プーリング後の距離、log-log 傾きの当てはめを提供する。
# How: すべて numpy の純関数。傾きは (log2 n, log2 err) への最小二乗直線で求める。
# Key functions: `sup_norm()`, `norm_2inf()`, `sample_signal()`, `dist_x()`, `dist_pooled()`, `fit_loglog_slope()`
# Collaboration: experiments/generalization が誤差計測と傾き推定に使い、テストが有界性の確認に使う。
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .errors import InvalidArgumentError, UnsupportedSignalError
from .signals import Signal


@dataclass(frozen=True)
class ErrorRecord:
    n: int
    trial: int
    dist_value: float
    pooled_dist: float

    def __post_init__(self) -> None:
        for val in (self.dist_value, self.pooled_dist):
            if not (math.isfinite(val) and val >= 0):
                raise InvalidArgumentError(f"error values must be finite and >= 0, got {val!r}")


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    residual: float


def sup_norm(v: Any) -> float:
    arr = np.asarray(v, dtype=np.float64)
    if arr.size == 0:
        raise InvalidArgumentError("sup_norm of an empty array")
    return float(np.max(np.abs(arr)))


def norm_2inf(fmat: Any) -> float:
    arr = np.asarray(fmat, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise InvalidArgumentError("norm_2inf needs an N x F matrix with N >= 1")
    row_sup = np.max(np.abs(arr), axis=1)
    return float(math.sqrt(np.mean(row_sup * row_sup)))


def sample_signal(s: Signal, points: Any) -> np.ndarray:
    """S^X f: row i is f(points[i])."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        if not s.point_evaluable:
            raise UnsupportedSignalError(kind=s.name)
        return np.zeros((0, s.output_dim))
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    return s.evaluate(pts)


def dist_x(fmat: Any, gmat: Any) -> float:
    a = np.asarray(fmat, dtype=np.float64)
    b = np.asarray(gmat, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"shape mismatch: {a.shape} vs {b.shape}")
    return norm_2inf(a - b)


def dist_pooled(a: Any, b: Any) -> float:
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape:
        raise InvalidArgumentError(f"shape mismatch: {x.shape} vs {y.shape}")
    return sup_norm(x - y)


def fit_loglog_slope(ns: Sequence[float], errs: Sequence[float]) -> SlopeFit:
    x = np.asarray(ns, dtype=np.float64)
    y = np.asarray(errs, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidArgumentError("sizes and errors must be equally long 1-d sequences")
    if x.size < 2:
        raise InvalidArgumentError("slope fitting needs at least two points")
    if np.any(~(y > 0)) or np.any(~(x > 0)):
        raise InvalidArgumentError("slope fitting needs positive sizes and errors")
    lx, ly = np.log2(x), np.log2(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    return SlopeFit(float(slope), float(intercept), float(math.sqrt(np.mean(resid * resid))))
