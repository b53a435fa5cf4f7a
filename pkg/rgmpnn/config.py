# Role: コマンドごとの JSON 設定を読み込み・検証し、dataclass の設定と manifest 用の解決済み辞書を相互変換する。
# How: dataclassで設定スキーマ（既定値込み）を定義し、フィールド表で型/必須/範囲を検査する。未知キーは警告、欠落・型違いはエラーとして全件を列挙する。
# Key functions: `load_command_config()`, `validate_config()`, `validate_data()`, `default_threads()`, `signal_from_dict()`
# Collaboration: cli が `--config`/`--seed`/`--threads` と合わせて呼び、experiments/generalization/bounds に渡す設定オブジェクトを得る。manifest.json もそのまま設定として読める。
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Callable

from .bounds import ClassDistribution, ClassSpec, node_law_from_dict
from .errors import ConfigError, InvalidArgumentError
from .experiments import NETWORK_KINDS, ConvergenceConfig, SoundnessConfig
from .generalization import DEFAULT_LOSS_LIPSCHITZ, GapConfig
from .kernels import kernel_from_dict
from .seeds import STREAM_SIGNAL, derive_seed
from .signals import SIGNAL_KINDS, Signal, make_signal
from .space import space_from_name

COMMANDS = (
    "sample-graph",
    "convergence",
    "stability",
    "bounds",
    "generalization",
    "soundness",
    "degree-concentration",
)

# runtime-only keys: accepted in config files, left out of the resolved config
RUNTIME_KEYS = {"threads"}


def default_threads() -> int:
    raw = (os.environ.get("RGMPNN_THREADS") or "").strip()
    try:
        v = int(raw) if raw else 1
    except ValueError:
        v = 1
    return max(1, v)


# --- command configs (JSON-level) ----------------------------------------------------------


@dataclass
class SampleGraphConfig:
    n: int = 256
    kernel: dict[str, Any] = field(default_factory=lambda: {"kind": "ball", "r": 0.5})
    signal: dict[str, Any] = field(default_factory=lambda: {"kind": "product"})
    network: str | None = None
    dims: list[int] = field(default_factory=lambda: [1, 16, 1])
    init_scale: float = 1.0
    space: str = "unit_square"
    seed: int = 0
    threads: int = 1


@dataclass
class StabilityConfig:
    n: int = 256
    n_prime: int = 256
    trials: int = 20
    kernel: dict[str, Any] = field(default_factory=lambda: {"kind": "constant", "c": 1.0})
    signal: dict[str, Any] = field(default_factory=lambda: {"kind": "product"})
    network: str = "mean"
    dims: list[int] = field(default_factory=lambda: [1, 1])
    init_scale: float = 1.0
    p: float | None = 0.01
    dudley_c: float = 1.0
    space: str = "unit_square"
    seed: int = 0
    seed_prime: int | None = None
    threads: int = 1


@dataclass
class BoundsConfig:
    p: float = 0.01
    kernel: dict[str, Any] = field(default_factory=lambda: {"kind": "smoothed_ball", "r": 0.3, "delta": 0.05})
    signal: dict[str, Any] = field(default_factory=lambda: {"kind": "product"})
    network: str = "graphsage"
    dims: list[int] = field(default_factory=lambda: [1, 16, 1])
    init_scale: float = 1.0
    layers: list[dict[str, float]] | None = None
    n: int | None = None
    dudley_c: float = 1.0
    grid_res: int = 21
    space: str = "unit_square"
    seed: int = 0
    threads: int = 1


@dataclass
class GeneralizationConfig:
    classes: list[dict[str, Any]] = field(default_factory=list)
    node_law: dict[str, Any] = field(default_factory=lambda: {"kind": "fixed", "n": 64})
    m: int = 20
    trials: int = 10
    mc_size: int = 400
    loss_lipschitz: float = DEFAULT_LOSS_LIPSCHITZ
    network: str = "graphsage"
    dims: list[int] = field(default_factory=lambda: [1, 16, 2])
    init_scale: float = 1.0
    statement_exponent: bool = False
    dudley_c: float = 1.0
    space: str = "unit_square"
    seed: int = 0
    threads: int = 1

    def to_gap_config(self) -> GapConfig:
        space = space_from_name(self.space)
        classes = tuple(
            ClassSpec(
                kernel=kernel_from_dict(c["kernel"]),
                signal=signal_from_dict(c["signal"], derive_seed(self.seed, STREAM_SIGNAL, j)),
                gamma=float(c["gamma"]),
            )
            for j, c in enumerate(self.classes)
        )
        return GapConfig(
            class_dist=ClassDistribution(classes, node_law_from_dict(self.node_law), space),
            m=self.m,
            trials=self.trials,
            loss_lipschitz=self.loss_lipschitz,
            mc_size=self.mc_size,
            network=self.network,
            dims=list(self.dims),
            init_scale=self.init_scale,
            statement_exponent=self.statement_exponent,
            dudley_c=self.dudley_c,
            seed=self.seed,
            threads=self.threads,
        )


@dataclass
class DegreesConfig:
    kernel: dict[str, Any] = field(default_factory=lambda: {"kind": "smoothed_ball", "r": 0.3, "delta": 0.05})
    p: float = 0.05
    trials: int = 200
    n: int | None = None
    dudley_c: float = 1.0
    grid_res: int = 21
    space: str = "unit_square"
    seed: int = 0
    threads: int = 1


CONFIG_TYPES: dict[str, type] = {
    "sample-graph": SampleGraphConfig,
    "convergence": ConvergenceConfig,
    "stability": StabilityConfig,
    "bounds": BoundsConfig,
    "generalization": GeneralizationConfig,
    "soundness": SoundnessConfig,
    "degree-concentration": DegreesConfig,
}


def signal_from_dict(data: dict[str, Any], seed: int) -> Signal:
    params = dict(data)
    kind = params.pop("kind", "product")
    return make_signal(kind, int(params.pop("seed", seed)), **params)


# --- schema ---------------------------------------------------------------------------------


@dataclass(frozen=True)
class FieldSpec:
    kind: str
    required: bool = False
    check: Callable[[Any], str | None] | None = None
    nullable: bool = False


def _is_int(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_number(v: Any) -> bool:
    return (isinstance(v, (int, float))) and not isinstance(v, bool)


_TYPE_CHECKS: dict[str, Callable[[Any], bool]] = {
    "int": _is_int,
    "number": _is_number,
    "bool": lambda v: isinstance(v, bool),
    "str": lambda v: isinstance(v, str),
    "object": lambda v: isinstance(v, dict),
    "int_list": lambda v: isinstance(v, list) and all(_is_int(x) for x in v),
    "number_list": lambda v: isinstance(v, list) and all(_is_number(x) for x in v),
    "str_list": lambda v: isinstance(v, list) and all(isinstance(x, str) for x in v),
    "object_list": lambda v: isinstance(v, list) and all(isinstance(x, dict) for x in v),
}


def _positive(v: Any) -> str | None:
    return None if v > 0 else "must be > 0"


def _at_least_one(v: Any) -> str | None:
    return None if v >= 1 else "must be >= 1"


def _probability(v: Any) -> str | None:
    return None if 0 < v < 1 else "must lie in (0, 1)"


def _seed(v: Any) -> str | None:
    return None if 0 <= v < 2**64 else "must be an unsigned 64-bit integer"


def _nonempty(v: Any) -> str | None:
    return None if len(v) > 0 else "must not be empty"


def _kernel_check(v: Any) -> str | None:
    try:
        kernel_from_dict(v)
    except (InvalidArgumentError, KeyError, TypeError, ValueError) as e:
        return f"invalid kernel ({e})"
    return None


def _space_check(v: Any) -> str | None:
    try:
        space_from_name(v)
    except (InvalidArgumentError, ValueError) as e:
        return str(e)
    return None


def _signal_check(v: Any) -> str | None:
    if not isinstance(v.get("kind", "product"), str):
        return "signal kind must be a string"
    try:
        signal_from_dict(v, 0)
    except (InvalidArgumentError, TypeError, ValueError) as e:
        return f"invalid signal ({e})"
    return None


def _signal_name_check(v: Any) -> str | None:
    return None if v.strip().lower() in SIGNAL_KINDS else f"unknown signal '{v}' (one of {list(SIGNAL_KINDS)})"


def _signal_names_check(v: Any) -> str | None:
    for name in v:
        msg = _signal_name_check(name)
        if msg:
            return msg
    return _nonempty(v)


def _network_check(v: Any) -> str | None:
    return None if v.strip().lower() in NETWORK_KINDS else f"unknown network '{v}' (one of {list(NETWORK_KINDS)})"


def _dims_check(v: Any) -> str | None:
    if len(v) < 2:
        return "needs an input dim and at least one layer"
    return None if min(v) >= 1 else "entries must be >= 1"


CONVERGENCE_KERNELS = ("constant", "ball", "smoothed_ball")


def _kernel_name_check(v: Any) -> str | None:
    return None if v in CONVERGENCE_KERNELS else f"unknown kernel '{v}' (one of {list(CONVERGENCE_KERNELS)})"


def _radii_check(v: Any) -> str | None:
    return None if all(r > 0 for r in v) else "radii must be > 0"


def _sizes_check(v: Any) -> str | None:
    if not v:
        return "must not be empty"
    if min(v) < 1:
        return "entries must be >= 1"
    if any(b <= a for a, b in zip(v[:-1], v[1:])):
        return "must be strictly increasing"
    return None


LAYER_KEYS = {"lip_phi", "lip_psi", "bias_phi", "bias_psi"}


def _layers_check(v: Any) -> str | None:
    for i, item in enumerate(v):
        if set(item) != LAYER_KEYS:
            return f"layers[{i}] needs exactly {sorted(LAYER_KEYS)}"
        if not all(_is_number(x) and x >= 0 for x in item.values()):
            return f"layers[{i}] values must be numbers >= 0"
    return _nonempty(v)


def _node_law_check(v: Any) -> str | None:
    try:
        node_law_from_dict(v)
    except (InvalidArgumentError, KeyError, TypeError, ValueError) as e:
        return f"invalid node law ({e})"
    return None


_COMMON = {
    "seed": FieldSpec("int", check=_seed),
    "space": FieldSpec("str", check=_space_check),
    "threads": FieldSpec("int", check=_at_least_one),
    "command": FieldSpec("str"),
}

_NETWORK = {
    "network": FieldSpec("str", check=_network_check),
    "dims": FieldSpec("int_list", check=_dims_check),
    "init_scale": FieldSpec("number", check=_positive),
}

SCHEMAS: dict[str, dict[str, FieldSpec]] = {
    "sample-graph": {
        "n": FieldSpec("int", required=True, check=_at_least_one),
        "kernel": FieldSpec("object", required=True, check=_kernel_check),
        "signal": FieldSpec("object", check=_signal_check),
        **_NETWORK,
        "network": FieldSpec("str", nullable=True, check=_network_check),
    },
    "convergence": {
        "trials": FieldSpec("int", required=True, check=_at_least_one),
        "sizes": FieldSpec("int_list", required=True, check=_sizes_check),
        "reference_n": FieldSpec("int", required=True, check=_at_least_one),
        "kernel": FieldSpec("str", check=_kernel_name_check),
        "radii": FieldSpec("number_list", check=_radii_check),
        "delta": FieldSpec("number", check=_positive),
        "c": FieldSpec("number", check=_positive),
        "signals": FieldSpec("str_list", check=_signal_names_check),
        "fit_min_n": FieldSpec("int", check=_at_least_one),
        **_NETWORK,
    },
    "stability": {
        "n": FieldSpec("int", required=True, check=_at_least_one),
        "n_prime": FieldSpec("int", required=True, check=_at_least_one),
        "trials": FieldSpec("int", required=True, check=_at_least_one),
        "kernel": FieldSpec("object", required=True, check=_kernel_check),
        "signal": FieldSpec("object", check=_signal_check),
        "p": FieldSpec("number", check=_probability, nullable=True),
        "dudley_c": FieldSpec("number", check=_positive),
        "seed_prime": FieldSpec("int", check=_seed, nullable=True),
        **_NETWORK,
    },
    "bounds": {
        "p": FieldSpec("number", required=True, check=_probability),
        "kernel": FieldSpec("object", required=True, check=_kernel_check),
        "signal": FieldSpec("object", check=_signal_check),
        "layers": FieldSpec("object_list", nullable=True, check=_layers_check),
        "n": FieldSpec("int", check=_at_least_one, nullable=True),
        "dudley_c": FieldSpec("number", check=_positive),
        "grid_res": FieldSpec("int", check=lambda v: None if v >= 2 else "must be >= 2"),
        **_NETWORK,
    },
    "generalization": {
        "classes": FieldSpec("object_list", required=True, check=_nonempty),
        "node_law": FieldSpec("object", required=True, check=_node_law_check),
        "m": FieldSpec("int", required=True, check=_at_least_one),
        "trials": FieldSpec("int", required=True, check=_at_least_one),
        "mc_size": FieldSpec("int", check=_at_least_one),
        "loss_lipschitz": FieldSpec("number", check=_positive),
        "statement_exponent": FieldSpec("bool"),
        "dudley_c": FieldSpec("number", check=_positive),
        **_NETWORK,
    },
    "soundness": {
        "trials": FieldSpec("int", required=True, check=_at_least_one),
        "kernel": FieldSpec("object", required=True, check=_kernel_check),
        "signal": FieldSpec("str", check=_signal_name_check),
        "p": FieldSpec("number", check=_probability),
        "n": FieldSpec("int", check=_at_least_one, nullable=True),
        "proxy": FieldSpec("str", check=lambda v: None if v in {"large_graph", "quadrature"} else "unknown proxy"),
        "proxy_n": FieldSpec("int", check=_at_least_one),
        "quad_resolution": FieldSpec("int", check=_at_least_one),
        "dudley_c": FieldSpec("number", check=_positive),
        **_NETWORK,
    },
    "degree-concentration": {
        "kernel": FieldSpec("object", required=True, check=_kernel_check),
        "trials": FieldSpec("int", required=True, check=_at_least_one),
        "p": FieldSpec("number", check=_probability),
        "n": FieldSpec("int", check=_at_least_one, nullable=True),
        "dudley_c": FieldSpec("number", check=_positive),
        "grid_res": FieldSpec("int", check=lambda v: None if v >= 2 else "must be >= 2"),
    },
}


@dataclass
class ValidationReport:
    command: str | None
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict[str, Any]:
        return {"command": self.command, "ok": self.ok, "errors": self.errors, "warnings": self.warnings}


def _class_issues(classes: list[dict[str, Any]]) -> list[str]:
    issues = []
    for j, c in enumerate(classes):
        for key in ("kernel", "signal", "gamma"):
            if key not in c:
                issues.append(f"classes[{j}].{key}: missing")
        if isinstance(c.get("kernel"), dict):
            msg = _kernel_check(c["kernel"])
            if msg:
                issues.append(f"classes[{j}].kernel: {msg}")
        if isinstance(c.get("signal"), dict):
            msg = _signal_check(c["signal"])
            if msg:
                issues.append(f"classes[{j}].signal: {msg}")
        if "gamma" in c and not _is_number(c["gamma"]):
            issues.append(f"classes[{j}].gamma: expected number")
    return issues


def _cross_field_issues(command: str, data: dict[str, Any]) -> list[str]:
    """Constraints that tie several fields together; run only on an otherwise valid config."""
    cfg = _from_dict(CONFIG_TYPES[command], {k: v for k, v in data.items() if k != "command"})
    issues = []
    if command == "convergence":
        if cfg.sizes[-1] > cfg.reference_n:
            issues.append(f"sizes: largest size {cfg.sizes[-1]} exceeds reference_n={cfg.reference_n}")
        if cfg.kernel != "constant" and not cfg.radii:
            issues.append(f"radii: must not be empty for kernel '{cfg.kernel}'")
    if command == "generalization":
        gammas = [float(c["gamma"]) for c in cfg.classes]
        if min(gammas) < 0 or abs(sum(gammas) - 1.0) > 1e-9:
            issues.append(f"classes: gammas must be >= 0 and sum to 1, got sum {sum(gammas)!r}")
        if cfg.mc_size < 10 * cfg.m:
            issues.append(f"mc_size: must be >= 10*m = {10 * cfg.m}, got {cfg.mc_size}")
    return issues


def validate_data(command: str, data: Any) -> ValidationReport:
    report = ValidationReport(command)
    if command not in SCHEMAS:
        report.errors.append(f"command: unknown command '{command}'")
        return report
    if not isinstance(data, dict):
        report.errors.append("config: top level must be a JSON object")
        return report
    schema = {**_COMMON, **SCHEMAS[command]}
    for name, spec in schema.items():
        if name not in data:
            if spec.required:
                report.errors.append(f"{name}: missing required field")
            continue
        val = data[name]
        if val is None:
            if not spec.nullable:
                report.errors.append(f"{name}: must not be null")
            continue
        if not _TYPE_CHECKS[spec.kind](val):
            report.errors.append(f"{name}: expected {spec.kind}, got {type(val).__name__}")
            continue
        if spec.check is not None:
            msg = spec.check(val)
            if msg:
                report.errors.append(f"{name}: {msg}")
    if isinstance(data.get("command"), str) and data["command"] != command:
        report.errors.append(f"command: config is for '{data['command']}', not '{command}'")
    if command == "generalization" and isinstance(data.get("classes"), list):
        report.errors.extend(_class_issues([c for c in data["classes"] if isinstance(c, dict)]))
    if not report.errors:
        report.errors.extend(_cross_field_issues(command, data))
    for key in data:
        if key not in schema:
            report.warnings.append(f"{key}: unknown key (ignored)")
    return report


def read_json(path: str | Path) -> Any:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}", field=str(p)) from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}", field=str(p)) from e


def _unwrap_manifest(data: Any) -> tuple[Any, str | None]:
    """(config dict, command) for either a plain config or a run manifest."""
    if isinstance(data, dict) and isinstance(data.get("config"), dict) and "artifacts" in data:
        return data["config"], data.get("command")
    if isinstance(data, dict):
        return data, data.get("command") if isinstance(data.get("command"), str) else None
    return data, None


def validate_config(path: str | Path, command: str | None = None) -> ValidationReport:
    data, named = _unwrap_manifest(read_json(path))
    cmd = command or named
    if cmd is None:
        report = ValidationReport(None)
        report.errors.append("command: missing (add a \"command\" key or pass the command)")
        return report
    return validate_data(cmd, data)


def _from_dict(cls: type, data: dict[str, Any]) -> Any:
    kwargs = {}
    for f in fields(cls):
        if f.name in data:
            val = data[f.name]
            if isinstance(val, list):
                val = list(val)
            elif isinstance(val, dict):
                val = dict(val)
            kwargs[f.name] = val
    return cls(**kwargs)


def _to_dict(cfg: Any) -> dict[str, Any]:
    return {k: v for k, v in asdict(cfg).items() if k not in RUNTIME_KEYS}


def default_config_dict(command: str) -> dict[str, Any]:
    return _to_dict(CONFIG_TYPES[command]())


@dataclass
class LoadedConfig:
    command: str
    config: Any
    resolved: dict[str, Any]

    @property
    def seed(self) -> int:
        return int(self.resolved.get("seed", 0))


def load_command_config(
    command: str,
    path: str | Path | None = None,
    *,
    seed: int | None = None,
    threads: int | None = None,
) -> LoadedConfig:
    """Config for `command` from a config file or manifest; `seed`/`threads` override the file."""
    if command not in CONFIG_TYPES:
        raise ConfigError(f"unknown command '{command}'", field="command")
    data: dict[str, Any] = {}
    if path is not None:
        raw, named = _unwrap_manifest(read_json(path))
        if named is not None and named != command:
            raise ConfigError(f"config is for '{named}', not '{command}'", field="command")
        report = validate_data(command, raw)
        if not report.ok:
            first = report.errors[0].split(":", 1)[0]
            raise ConfigError("invalid config", field=first, issues=report.errors)
        data = {k: v for k, v in raw.items() if k != "command"}
    if seed is not None:
        msg = _seed(int(seed))
        if msg:
            raise ConfigError(msg, field="seed")
        data["seed"] = int(seed)
    data["threads"] = int(threads) if threads is not None else int(data.get("threads") or default_threads())
    if data["threads"] < 1:
        raise ConfigError("must be >= 1", field="threads")
    cfg = _from_dict(CONFIG_TYPES[command], data)
    if hasattr(cfg, "validate"):
        try:
            cfg.validate()
        except InvalidArgumentError as e:
            raise ConfigError(str(e), field="config") from e
    return LoadedConfig(command, cfg, _to_dict(cfg))
