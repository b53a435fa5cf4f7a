# Role: ライブラリ全体で使う例外クラスを一箇所で定義する。
# How: 引数エラー（ValueError系）と前提条件違反（RuntimeError系）に分け、文脈情報をキーワード引数で受け取ってメッセージを組み立てる。
# Key functions: `InvalidArgumentError`, `ConfigError`, `PreconditionError` とそのサブクラス
# Collaboration: 各計算モジュールが送出し、`rgmpnn/cli.py` が終了コード（2/3）に変換する。
from __future__ import annotations

from typing import Any


class InvalidArgumentError(ValueError):
    pass


class ConfigError(ValueError):
    def __init__(self, message: str, *, field: str | None = None, issues: list[str] | None = None):
        self.field = field
        self.issues = list(issues or [])
        msg = message
        if field:
            msg = f"{field}: {message}"
        if self.issues:
            msg += " (" + "; ".join(self.issues) + ")"
        super().__init__(msg)


class PreconditionError(RuntimeError):
    pass


class IsolatedNodeError(PreconditionError):
    def __init__(self, *, node: int, degree: float = 0.0):
        self.node = node
        self.degree = degree
        super().__init__(f"node {node} has degree {degree!r}; mean aggregation is undefined")


class DegenerateDegreeError(PreconditionError):
    def __init__(self, *, point: Any):
        self.point = point
        super().__init__(f"estimated kernel degree is 0 at {point!r}")


class UnsupportedSignalError(PreconditionError):
    def __init__(self, *, kind: str, reason: str = "not point-evaluable"):
        self.kind = kind
        super().__init__(f"signal '{kind}' is {reason}")


class NonLipschitzKernelError(PreconditionError):
    def __init__(self, *, kernel: Any):
        self.kernel = kernel
        super().__init__(f"kernel {kernel!r} is not Lipschitz; bound formulas need a finite L_W")


class NonLipschitzSignalError(PreconditionError):
    def __init__(self, *, sup_f: float, lip_f: float):
        self.sup_f = sup_f
        self.lip_f = lip_f
        super().__init__(f"signal regularity (sup={sup_f!r}, lip={lip_f!r}) is not finite")


class ConditionViolatedError(PreconditionError):
    def __init__(self, *, n: int, required: int, p: float):
        self.n = n
        self.required = required
        self.p = p
        super().__init__(f"N={n} is below the minimum node count {required} for p={p!r}")


class RepresentativenessError(PreconditionError):
    def __init__(self, *, class_index: int, count: float):
        self.class_index = class_index
        self.count = count
        super().__init__(f"class {class_index}: gamma*m = {count!r} is not an integer")


class OutputDimensionError(PreconditionError):
    def __init__(self, *, output_dim: int, classes: int):
        self.output_dim = output_dim
        self.classes = classes
        super().__init__(f"network output dim {output_dim} is smaller than the class count {classes}")
