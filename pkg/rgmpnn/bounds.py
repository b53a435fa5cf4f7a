# Role: 安定性・汎化誤差の上界に現れる定数（ε_d, ε_W, λ̃, D, K, B′, B″, C, A′, A″, 最小ノード数）を数値として評価する。
# How: 層ごとのノルム/Lipschitz 再帰を前向きに解き、λ̃ を線形に分割した係数を K の積で重み付けして集計する。値は √N でスケールした係数として保持し、任意の N に使い回す。
# Key functions: `min_nodes()`, `epsilon_d()`, `epsilon_w()`, `layer_error_D()`, `layer_factor_K()`, `solve_recurrence()`, `signal_regularity_recursions()`, `bound_constants()`, `node_level_bound()`, `pooled_bound()`, `two_graph_bound()`, `expected_sq_bound()`, `deterministic_coefficients()`, `deterministic_output_bound()`, `generalization_bound()`, `bound_report()`
# Collaboration: kernels の `RegularityProfile` と mpnn の `LayerConstants` を入力に取り、experiments/generalization/cli が上界の評価とレポート出力に使う。
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy.special import erfc

from .errors import (
    ConditionViolatedError,
    InvalidArgumentError,
    NonLipschitzKernelError,
    NonLipschitzSignalError,
    RepresentativenessError,
)
from .kernels import Kernel, RegularityProfile
from .mpnn import LayerConstants
from .signals import Signal
from .space import UNIT_SQUARE, MetricMeasureSpace

SQRT2 = math.sqrt(2.0)
SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class SignalRegularity:
    sup_f: float
    lip_f: float

    @property
    def finite(self) -> bool:
        return math.isfinite(self.sup_f) and math.isfinite(self.lip_f)

    def to_dict(self) -> dict[str, Any]:
        return {"sup_f": _jsonable(self.sup_f), "lip_f": _jsonable(self.lip_f)}


def signal_regularity(s: Signal) -> SignalRegularity:
    return SignalRegularity(sup_f=s.sup_f, lip_f=s.lip_f)


def _jsonable(val: float) -> float | str:
    if math.isnan(val):
        return "nan"
    if math.isinf(val):
        return "inf" if val > 0 else "-inf"
    return val


def _check_p(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise InvalidArgumentError(f"p must lie in (0, 1), got {p!r}")
    return float(p)


def _require_lipschitz(profile: RegularityProfile) -> None:
    if not profile.lipschitz:
        raise NonLipschitzKernelError(kernel=profile)


def _require_finite(sig: SignalRegularity) -> None:
    if not sig.finite:
        raise NonLipschitzSignalError(sup_f=sig.sup_f, lip_f=sig.lip_f)


def _log_term(p: float) -> float:
    return math.sqrt(math.log(2.0 / p))


# --- minimum N and concentration radii ------------------------------------------------


def min_nodes_threshold(profile: RegularityProfile, p: float) -> float:
    """Right-hand side of the sqrt(N) condition."""
    _check_p(p)
    _require_lipschitz(profile)
    a = profile.zeta * profile.lip_w * math.sqrt(profile.dim_chi) / profile.d_min
    b = (SQRT2 * profile.sup_w + profile.lip_w) / profile.d_min
    return 2.0 * (a + b * _log_term(p))


def min_nodes(profile: RegularityProfile, p: float) -> int:
    target = min_nodes_threshold(profile, p) * (1.0 - 1e-12)
    if target <= 1.0:
        return 1
    n = max(1, math.ceil(target * target))
    while math.sqrt(n) < target:
        n += 1
    while n > 1 and math.sqrt(n - 1) >= target:
        n -= 1
    return n


def epsilon_d(profile: RegularityProfile, p: float) -> float:
    _check_p(p)
    _require_lipschitz(profile)
    return profile.zeta * (
        profile.lip_w * math.sqrt(profile.dim_chi) + (SQRT2 * profile.sup_w + profile.lip_w) * _log_term(p)
    )


def _normalized_kernel(profile: RegularityProfile) -> tuple[float, float]:
    """(||W~||_inf, L_W~) for W~ = W / d_W."""
    dm = profile.d_min
    return profile.sup_w / dm, profile.lip_w / dm + profile.lip_w * profile.sup_w / (dm * dm)


def lambda_tilde(layer: LayerConstants, sig: SignalRegularity, profile: RegularityProfile) -> float:
    _require_lipschitz(profile)
    _require_finite(sig)
    sw_t, lw_t = _normalized_kernel(profile)
    first = sw_t * sig.lip_f * layer.lip_phi
    second = lw_t * (layer.bias_phi + 2.0 * layer.lip_phi * sig.sup_f)
    return math.sqrt(first * first + second * second)


def epsilon_w(layer: LayerConstants, sig: SignalRegularity, profile: RegularityProfile, p: float) -> float:
    _check_p(p)
    lam = lambda_tilde(layer, sig, profile)
    zeta = profile.zeta
    return zeta * lam * math.sqrt(profile.dim_chi) + (
        SQRT2 * profile.sup_w * (2.0 * layer.lip_phi * sig.sup_f + layer.bias_phi) + zeta * lam
    ) * _log_term(p)


def layer_error_D(layer: LayerConstants, sig: SignalRegularity, profile: RegularityProfile, p: float) -> float:
    """sqrt(N)-scaled layer-wise error coefficient."""
    eps_d = epsilon_d(profile, p)
    eps_w = epsilon_w(layer, sig, profile, p)
    dm = profile.d_min
    spread = 2.0 * layer.lip_phi * sig.sup_f + layer.bias_phi
    return layer.lip_psi * (4.0 * eps_d * profile.sup_w * spread / (dm * dm) + eps_w)


def layer_factor_K(layer: LayerConstants, profile: RegularityProfile) -> float:
    dm = profile.d_min
    ratio = profile.sup_w * layer.lip_phi * layer.lip_psi / dm
    return math.sqrt(layer.lip_psi**2 + 8.0 * ratio * ratio)


def network_lipschitz_factor(layers: Sequence[LayerConstants], profile: RegularityProfile) -> float:
    return math.prod(layer_factor_K(layer, profile) for layer in layers)


def solve_recurrence(a: Sequence[float], b: Sequence[float], eta0: float) -> float:
    """eta_T for eta_l = a_l * eta_{l-1} + b_l."""
    if len(a) != len(b):
        raise InvalidArgumentError(f"recurrence coefficients differ in length: {len(a)} vs {len(b)}")
    eta = float(eta0)
    for a_l, b_l in zip(a, b):
        eta = a_l * eta + b_l
    return eta


# --- signal regularity through the layers -----------------------------------------------


@dataclass(frozen=True)
class LayerRegularity:
    """Bounds on f^(l): norm <= D1 + D2*||f||, Lipschitz <= Z1 + Z2*||f|| + Z3*L_f."""

    norm_bound: float
    lip_bound: float
    D1: float
    D2: float
    Z1: float
    Z2: float
    Z3: float

    def to_dict(self) -> dict[str, float]:
        return {
            "norm_bound": self.norm_bound,
            "lip_bound": self.lip_bound,
            "D1": self.D1,
            "D2": self.D2,
            "Z1": self.Z1,
            "Z2": self.Z2,
            "Z3": self.Z3,
        }


@dataclass(frozen=True)
class SignalRecursion:
    layers: list[LayerRegularity]
    B_prime: float
    B_dprime: float

    @property
    def output(self) -> LayerRegularity:
        return self.layers[-1]


def signal_regularity_recursions(
    layers: Sequence[LayerConstants],
    profile: RegularityProfile,
    sig: SignalRegularity,
) -> SignalRecursion:
    """Entry 0 describes the input signal, entry l the output of layer l."""
    _require_lipschitz(profile)
    _require_finite(sig)
    sw, dm = profile.sup_w, profile.d_min
    _, lw_t = _normalized_kernel(profile)
    cur = LayerRegularity(sig.sup_f, sig.lip_f, 0.0, 1.0, 0.0, 0.0, 1.0)
    out = [cur]
    alphas: list[float] = []
    betas: list[float] = []
    for layer in layers:
        alpha = layer.lip_psi + 2.0 * sw * layer.lip_phi / dm
        beta = layer.lip_psi * sw * layer.bias_phi / dm + layer.bias_psi
        a_lip = layer.lip_psi * (1.0 + sw * layer.lip_phi / dm)
        u_lip = layer.lip_psi * layer.bias_phi * lw_t
        v_lip = 2.0 * layer.lip_psi * layer.lip_phi * lw_t
        cur = LayerRegularity(
            norm_bound=alpha * cur.norm_bound + beta,
            lip_bound=a_lip * cur.lip_bound + u_lip + v_lip * cur.norm_bound,
            D1=alpha * cur.D1 + beta,
            D2=alpha * cur.D2,
            Z1=a_lip * cur.Z1 + u_lip + v_lip * cur.D1,
            Z2=a_lip * cur.Z2 + v_lip * cur.D2,
            Z3=a_lip * cur.Z3,
        )
        out.append(cur)
        alphas.append(alpha)
        betas.append(beta)
    return SignalRecursion(
        layers=out,
        B_prime=solve_recurrence(alphas, betas, 0.0),
        B_dprime=math.prod(alphas),
    )


# --- assembled constants ---------------------------------------------------------------------


@dataclass(frozen=True)
class BoundConstants:
    """Primed coefficients of (1, ||f||, L_f), without and with the sqrt(log(2/p)) factor."""

    C1_prime: float
    C2_prime: float
    C3_prime: float
    C1_dprime: float
    C2_dprime: float
    C3_dprime: float
    B_prime: float
    B_dprime: float
    T: int

    @property
    def node_grouped(self) -> tuple[float, float, float]:
        return (
            self.C1_prime,
            max(self.C2_prime, self.C3_prime),
            max(self.C1_dprime, self.C2_dprime, self.C3_dprime),
        )

    @property
    def pooled_dprime(self) -> tuple[float, float, float]:
        extra = 2.0 * SQRT2
        return (
            self.C1_dprime + extra * self.B_prime,
            self.C2_dprime + extra * self.B_dprime,
            self.C3_dprime,
        )

    @property
    def pooled_grouped(self) -> tuple[float, float, float]:
        c1, c2, c3 = self.pooled_dprime
        return (self.C1_prime, max(self.C2_prime, self.C3_prime), max(c1, c2, c3))

    def plain_part(self, sig: SignalRegularity) -> float:
        return self.C1_prime + self.C2_prime * sig.sup_f + self.C3_prime * sig.lip_f

    def log_part(self, sig: SignalRegularity, *, pooled: bool = False) -> float:
        c1, c2, c3 = self.pooled_dprime if pooled else (self.C1_dprime, self.C2_dprime, self.C3_dprime)
        return c1 + c2 * sig.sup_f + c3 * sig.lip_f

    def coefficient(self, sig: SignalRegularity, p: float, *, pooled: bool = False) -> float:
        return self.plain_part(sig) + _log_term(p) * self.log_part(sig, pooled=pooled)

    def to_dict(self) -> dict[str, float]:
        c1, c2, c3 = self.node_grouped
        b1, b2, b3 = self.pooled_grouped
        p1, p2, p3 = self.pooled_dprime
        return {
            "C1": c1,
            "C2": c2,
            "C3": c3,
            "B1": b1,
            "B2": b2,
            "B3": b3,
            "C1_prime": self.C1_prime,
            "C2_prime": self.C2_prime,
            "C3_prime": self.C3_prime,
            "C1_dprime": self.C1_dprime,
            "C2_dprime": self.C2_dprime,
            "C3_dprime": self.C3_dprime,
            "pooled_C1_dprime": p1,
            "pooled_C2_dprime": p2,
            "pooled_C3_dprime": p3,
        }


def bound_constants(
    layers: Sequence[LayerConstants],
    profile: RegularityProfile,
    sig: SignalRegularity,
) -> BoundConstants:
    rec = signal_regularity_recursions(layers, profile, sig)
    zeta, dm, sw, lw = profile.zeta, profile.d_min, profile.sup_w, profile.lip_w
    root_dim = math.sqrt(profile.dim_chi)
    sw_t, lw_t = _normalized_kernel(profile)
    ks = [layer_factor_K(layer, profile) for layer in layers]
    g = 4.0 * zeta * lw * root_dim * sw / (dm * dm)
    h = 4.0 * zeta * (SQRT2 * sw + lw) * sw / (dm * dm)
    acc = [0.0] * 6
    for idx, layer in enumerate(layers):
        prev = rec.layers[idx]
        scale = math.prod(ks[idx + 1 :]) * layer.lip_psi
        lphi, phi0 = layer.lip_phi, layer.bias_phi
        e1 = zeta * sw_t * lphi * root_dim
        e2 = 2.0 * zeta * lw_t * lphi * root_dim
        e3 = zeta * sw_t * lphi
        e4 = 2.0 * zeta * lw_t * lphi + 2.0 * SQRT2 * sw * lphi
        e5 = (SQRT2 * sw + zeta * lw_t) * phi0
        e6 = zeta * lw_t * phi0 * root_dim
        acc[0] += scale * (g * (2.0 * lphi * prev.D1 + phi0) + e1 * prev.Z1 + e2 * prev.D1 + e6)
        acc[1] += scale * (2.0 * g * lphi * prev.D2 + e1 * prev.Z2 + e2 * prev.D2)
        acc[2] += scale * (e1 * prev.Z3)
        acc[3] += scale * (h * (2.0 * lphi * prev.D1 + phi0) + e3 * prev.Z1 + e4 * prev.D1 + e5)
        acc[4] += scale * (2.0 * h * lphi * prev.D2 + e3 * prev.Z2 + e4 * prev.D2)
        acc[5] += scale * (e3 * prev.Z3)
    return BoundConstants(*acc, B_prime=rec.B_prime, B_dprime=rec.B_dprime, T=len(layers))


def node_bound_constants(
    layers: Sequence[LayerConstants],
    profile: RegularityProfile,
    sig: SignalRegularity,
) -> tuple[float, float, float]:
    return bound_constants(layers, profile, sig).node_grouped


def pooled_bound_constants(
    layers: Sequence[LayerConstants],
    profile: RegularityProfile,
    sig: SignalRegularity,
) -> tuple[float, float, float]:
    return bound_constants(layers, profile, sig).pooled_grouped


# --- high-probability bounds --------------------------------------------------------------------


@dataclass(frozen=True)
class BoundResult:
    value: float
    confidence: float
    coefficient: float
    n: int
    p: float
    min_n: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "value": self.value,
            "confidence": self.confidence,
            "coefficient": self.coefficient,
            "n": self.n,
            "p": self.p,
            "min_n": self.min_n,
        }


@dataclass(frozen=True)
class TwoGraphBound:
    value: float
    confidence_as_printed: float
    confidence: float
    coefficient: float
    n: int
    n_prime: int
    p: float
    min_n: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "value": self.value,
            "confidence_as_printed": self.confidence_as_printed,
            "confidence": self.confidence,
            "coefficient": self.coefficient,
            "n": self.n,
            "n_prime": self.n_prime,
            "p": self.p,
            "min_n": self.min_n,
        }


def _require_min_n(n: int, profile: RegularityProfile, p: float) -> int:
    required = min_nodes(profile, p)
    if int(n) < required:
        raise ConditionViolatedError(n=int(n), required=required, p=p)
    return required


def node_level_bound(
    n: int,
    p: float,
    layers: Sequence[LayerConstants],
    profile: RegularityProfile,
    sig: SignalRegularity,
) -> BoundResult:
    _check_p(p)
    required = _require_min_n(n, profile, p)
    coeff = bound_constants(layers, profile, sig).coefficient(sig, p)
    t = len(layers)
    return BoundResult(coeff / math.sqrt(n), 1.0 - 3 * t * p, coeff, int(n), p, required)


def pooled_bound(
    n: int,
    p: float,
    layers: Sequence[LayerConstants],
    profile: RegularityProfile,
    sig: SignalRegularity,
) -> BoundResult:
    _check_p(p)
    required = _require_min_n(n, profile, p)
    coeff = bound_constants(layers, profile, sig).coefficient(sig, p, pooled=True)
    t = len(layers)
    return BoundResult(coeff / math.sqrt(n), 1.0 - (3 * t + 1) * p, coeff, int(n), p, required)


def two_graph_bound(
    n: int,
    n_prime: int,
    p: float,
    layers: Sequence[LayerConstants],
    profile: RegularityProfile,
    sig: SignalRegularity,
) -> TwoGraphBound:
    _check_p(p)
    required = _require_min_n(min(int(n), int(n_prime)), profile, p)
    coeff = bound_constants(layers, profile, sig).coefficient(sig, p, pooled=True)
    t = len(layers)
    return TwoGraphBound(
        value=coeff * (1.0 / math.sqrt(n) + 1.0 / math.sqrt(n_prime)),
        confidence_as_printed=1.0 - 2.0 * (3 * t * p + 1.0),
        confidence=1.0 - 2.0 * (3 * t + 1) * p,
        coefficient=coeff,
        n=int(n),
        n_prime=int(n_prime),
        p=p,
        min_n=required,
    )


# --- expected value and deterministic bounds ----------------------------------------------------


@dataclass(frozen=True)
class DeterministicBound:
    """||f^(T)||_{2;inf}^2 <= N^(2T) * (A' + A'' * ||f||^2); A' and A'' do not depend on N."""

    A_prime: float
    A_dprime: float
    n: int
    T: int
    sup_f: float

    @property
    def value(self) -> float:
        scale = self.A_prime + self.A_dprime * self.sup_f * self.sup_f
        if scale <= 0:
            return 0.0
        log_val = 2 * self.T * math.log(self.n) + math.log(scale)
        return math.exp(log_val) if log_val < 700 else math.inf


def deterministic_coefficients(layers: Sequence[LayerConstants], profile: RegularityProfile) -> tuple[float, float]:
    """(A', A''): per-layer factors 16 L_psi^2 (1 + ||W||^2 L_phi^2 / d_min^2), one N^2 pulled out of each."""
    ratio = profile.sup_w / profile.d_min
    a = [16.0 * layer.lip_psi**2 * (1.0 + (ratio * layer.lip_phi) ** 2) for layer in layers]
    b = [16.0 * (layer.lip_psi * layer.bias_phi) ** 2 + 16.0 * layer.bias_psi**2 for layer in layers]
    return solve_recurrence(a, b, 0.0), math.prod(a)


def deterministic_output_bound(
    layers: Sequence[LayerConstants],
    profile: RegularityProfile,
    n: int,
    sup_f: float,
) -> DeterministicBound:
    """Bound on ||f^(T)||_{2;inf}^2 that holds for every graph with n >= 1 nodes."""
    if int(n) < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n}")
    a_prime, a_dprime = deterministic_coefficients(layers, profile)
    return DeterministicBound(a_prime, a_dprime, int(n), len(layers), float(sup_f))


@dataclass(frozen=True)
class ExpectedSquareBound:
    leading: float
    remainder: float
    n0: float

    @property
    def value(self) -> float:
        return self.leading + self.remainder

    def to_dict(self) -> dict[str, float]:
        return {"leading": self.leading, "remainder": self.remainder, "value": self.value, "n0": self.n0}


def _tail_log(n0: float) -> float:
    """log bound on the integral of 2*exp(-t^2) over [n0, inf); exact sqrt(pi)*erfc(n0) below n0 = 1."""
    if n0 >= 1.0:
        return -n0 * n0
    return math.log(SQRT_PI * float(erfc(n0)))


def expected_sq_bound(
    n: int,
    layers: Sequence[LayerConstants],
    profile: RegularityProfile,
    sig: SignalRegularity,
    *,
    statement_exponent: bool = False,
    constants: BoundConstants | None = None,
) -> ExpectedSquareBound:
    """E[dist(pooled_G, pooled_W)^2] <= leading/N + remainder; `statement_exponent` uses N^(2T)."""
    consts = constants or bound_constants(layers, profile, sig)
    t = len(layers)
    h1 = consts.plain_part(sig)
    h2 = consts.log_part(sig, pooled=True)
    leading = SQRT_PI * (3 * t + 1) * (h1 + h2) ** 2 / n
    a = profile.zeta * profile.lip_w * math.sqrt(profile.dim_chi) / profile.d_min
    b = (SQRT2 * profile.sup_w + profile.lip_w) / profile.d_min
    n0 = -a / b + math.sqrt(n) / (2.0 * b)
    a_prime, a_dprime = deterministic_coefficients(layers, profile)
    base = a_prime + a_dprime * sig.sup_f**2 + consts.B_prime + sig.sup_f * consts.B_dprime
    if base <= 0:
        return ExpectedSquareBound(leading, 0.0, n0)
    power = 2 * t if statement_exponent else 2 * t - 1
    log_rem = _tail_log(n0) + power * math.log(n) + 2.0 * math.log(base)
    return ExpectedSquareBound(leading, math.exp(log_rem) if log_rem < 700 else math.inf, n0)


# --- generalization ------------------------------------------------------------------------------


@dataclass(frozen=True)
class NodeLaw:
    kind: str
    values: tuple[int, ...]
    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.values or len(self.values) != len(self.probs):
            raise InvalidArgumentError("node law needs equally long, nonempty values and probabilities")
        if min(self.values) < 1:
            raise InvalidArgumentError("node counts must be >= 1")
        if min(self.probs) < 0 or abs(sum(self.probs) - 1.0) > 1e-9:
            raise InvalidArgumentError("node law probabilities must be >= 0 and sum to 1")

    @classmethod
    def fixed(cls, n: int) -> NodeLaw:
        return cls("fixed", (int(n),), (1.0,))

    @classmethod
    def uniform_range(cls, lo: int, hi: int) -> NodeLaw:
        if int(hi) < int(lo):
            raise InvalidArgumentError("uniform range needs lo <= hi")
        vals = tuple(range(int(lo), int(hi) + 1))
        return cls("uniform_range", vals, tuple([1.0 / len(vals)] * len(vals)))

    @classmethod
    def categorical(cls, values: Sequence[int], probs: Sequence[float]) -> NodeLaw:
        return cls("categorical", tuple(int(v) for v in values), tuple(float(q) for q in probs))

    def expectation(self, fn: Callable[[int], float]) -> float:
        return float(sum(q * fn(v) for v, q in zip(self.values, self.probs) if q > 0))

    def sample(self, rng: np.random.Generator) -> int:
        if len(self.values) == 1:
            return self.values[0]
        return int(self.values[int(rng.choice(len(self.values), p=np.asarray(self.probs)))])

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "fixed":
            return {"kind": "fixed", "n": self.values[0]}
        if self.kind == "uniform_range":
            return {"kind": "uniform_range", "lo": self.values[0], "hi": self.values[-1]}
        return {"kind": "categorical", "values": list(self.values), "probs": list(self.probs)}


def node_law_from_dict(data: dict[str, Any]) -> NodeLaw:
    kind = str(data.get("kind", "fixed")).strip().lower()
    if kind == "fixed":
        return NodeLaw.fixed(int(data["n"]))
    if kind == "uniform_range":
        return NodeLaw.uniform_range(int(data["lo"]), int(data["hi"]))
    if kind == "categorical":
        return NodeLaw.categorical(data["values"], data["probs"])
    raise InvalidArgumentError(f"unknown node law '{kind}'")


@dataclass(frozen=True)
class ClassSpec:
    kernel: Kernel
    signal: Signal
    gamma: float


@dataclass(frozen=True)
class ClassDistribution:
    classes: tuple[ClassSpec, ...]
    node_law: NodeLaw
    space: MetricMeasureSpace = field(default=UNIT_SQUARE)

    def __post_init__(self) -> None:
        classes = tuple(self.classes)
        if not classes:
            raise InvalidArgumentError("a class distribution needs at least one class")
        if min(c.gamma for c in classes) < 0 or abs(sum(c.gamma for c in classes) - 1.0) > 1e-9:
            raise InvalidArgumentError("class probabilities must be >= 0 and sum to 1")
        object.__setattr__(self, "classes", classes)

    @property
    def num_classes(self) -> int:
        return len(self.classes)


def class_counts(dist: ClassDistribution, m: int) -> list[int]:
    """Per-class graph counts gamma_j * m of a representative training set."""
    counts = []
    for j, cls in enumerate(dist.classes):
        raw = cls.gamma * m
        if abs(raw - round(raw)) > 1e-9:
            raise RepresentativenessError(class_index=j, count=raw)
        counts.append(int(round(raw)))
    return counts


@dataclass(frozen=True)
class GeneralizationBound:
    value: float
    leading: float
    remainder: float
    per_sample: float
    C: float
    m: int
    factor: float

    def to_dict(self) -> dict[str, float]:
        return {
            "value": self.value,
            "leading": self.leading,
            "remainder": self.remainder,
            "per_sample": self.per_sample,
            "C": self.C,
            "m": self.m,
            "factor": self.factor,
        }


def generalization_bound(
    dist: ClassDistribution,
    layers: Sequence[LayerConstants],
    profiles: Sequence[RegularityProfile],
    sigs: Sequence[SignalRegularity],
    m: int,
    loss_lipschitz: float,
    *,
    statement_exponent: bool = False,
) -> GeneralizationBound:
    if not (len(profiles) == len(sigs) == dist.num_classes):
        raise InvalidArgumentError("one profile and one signal regularity per class are required")
    if int(m) < 1:
        raise InvalidArgumentError("training size m must be >= 1")
    class_counts(dist, int(m))
    consts = [bound_constants(layers, prof, sig) for prof, sig in zip(profiles, sigs)]
    big_c = 8.0 * max(sum(c.node_grouped) + c.B_prime + c.B_dprime for c in consts) ** 2
    sup_max = max(sig.sup_f for sig in sigs)
    lip_max = max(sig.lip_f for sig in sigs)
    gamma = dist.num_classes
    t = len(layers)
    factor = gamma * SQRT_PI * loss_lipschitz**2 * (3 * t + 1) * big_c * (1.0 + sup_max + lip_max) ** 2

    def _worst_remainder(n: int) -> float:
        return max(
            expected_sq_bound(n, layers, prof, sig, statement_exponent=statement_exponent, constants=c).remainder
            for prof, sig, c in zip(profiles, sigs, consts)
        )

    leading = factor * dist.node_law.expectation(lambda n: 1.0 / n)
    remainder = factor * dist.node_law.expectation(_worst_remainder) if factor > 0 else 0.0
    value = leading + remainder
    return GeneralizationBound(value, leading, remainder, value / int(m), big_c, int(m), factor)


# --- report ---------------------------------------------------------------------------------------


@dataclass
class BoundReport:
    p: float
    T: int
    profile: RegularityProfile
    signal: SignalRegularity
    eps_d: float
    per_layer: list[dict[str, Any]]
    recursion: SignalRecursion
    constants: BoundConstants
    min_n: int
    node_coefficient: float
    pooled_coefficient: float
    lipschitz_factor: float
    A_prime: float
    A_dprime: float
    n: int | None = None
    deterministic: DeterministicBound | None = None
    expected_sq: ExpectedSquareBound | None = None
    node_bound: BoundResult | None = None
    pooled: BoundResult | None = None

    def to_json(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "p": self.p,
            "T": self.T,
            "dudley_c": self.profile.dudley_c,
            "zeta": self.profile.zeta,
            "profile": self.profile.to_dict(),
            "signal": self.signal.to_dict(),
            "eps_d": self.eps_d,
            "layers": self.per_layer,
            "B_prime": self.recursion.B_prime,
            "B_dprime": self.recursion.B_dprime,
            "L_fT": self.recursion.output.lip_bound,
            "norm_fT": self.recursion.output.norm_bound,
            "min_n": self.min_n,
            "node_coefficient": self.node_coefficient,
            "pooled_coefficient": self.pooled_coefficient,
            "lipschitz_factor": self.lipschitz_factor,
            "A_prime": self.A_prime,
            "A_dprime": self.A_dprime,
            "failure_prob_multiplier": {
                "node": 3 * self.T,
                "pooled": 3 * self.T + 1,
                "two_graph": 2 * (3 * self.T + 1),
            },
        }
        doc.update(self.constants.to_dict())
        if self.n is not None:
            doc["n"] = self.n
        if self.deterministic is not None:
            doc["deterministic_value"] = _jsonable(self.deterministic.value)
        if self.expected_sq is not None:
            doc["expected_sq"] = {k: _jsonable(v) for k, v in self.expected_sq.to_dict().items()}
        if self.node_bound is not None:
            doc["node_bound"] = self.node_bound.to_dict()
        if self.pooled is not None:
            doc["pooled_bound"] = self.pooled.to_dict()
        return doc


def bound_report(
    layers: Sequence[LayerConstants],
    profile: RegularityProfile,
    sig: SignalRegularity,
    p: float,
    n: int | None = None,
) -> BoundReport:
    """Every constant of the chain; N-dependent entries only when `n` is given (and >= min_n)."""
    _check_p(p)
    rec = signal_regularity_recursions(layers, profile, sig)
    consts = bound_constants(layers, profile, sig)
    per_layer = []
    for idx, layer in enumerate(layers):
        prev = rec.layers[idx]
        at_layer = SignalRegularity(prev.norm_bound, prev.lip_bound)
        entry = {
            "eps_w": epsilon_w(layer, at_layer, profile, p),
            "lambda_tilde": lambda_tilde(layer, at_layer, profile),
            "D": layer_error_D(layer, at_layer, profile, p),
            "K": layer_factor_K(layer, profile),
        }
        entry.update(rec.layers[idx + 1].to_dict())
        entry.update(layer.to_dict())
        per_layer.append(entry)
    required = min_nodes(profile, p)
    a_prime, a_dprime = deterministic_coefficients(layers, profile)
    report = BoundReport(
        p=p,
        T=len(layers),
        profile=profile,
        signal=sig,
        eps_d=epsilon_d(profile, p),
        per_layer=per_layer,
        recursion=rec,
        constants=consts,
        min_n=required,
        node_coefficient=consts.coefficient(sig, p),
        pooled_coefficient=consts.coefficient(sig, p, pooled=True),
        lipschitz_factor=network_lipschitz_factor(layers, profile),
        A_prime=a_prime,
        A_dprime=a_dprime,
    )
    if n is not None:
        report.n = int(n)
        report.deterministic = deterministic_output_bound(layers, profile, int(n), sig.sup_f)
        report.expected_sq = expected_sq_bound(int(n), layers, profile, sig, constants=consts)
        if int(n) >= required:
            report.node_bound = node_level_bound(int(n), p, layers, profile, sig)
            report.pooled = pooled_bound(int(n), p, layers, profile, sig)
    return report
