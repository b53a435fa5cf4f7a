# Role: `rgmpnn` CLIの入口。サブコマンドを解釈して設定を読み、各実験に振り分けて成果物（CSV/JSON/SVG/manifest）を書き出す。
# How: `argparse` でコマンド体系を定義し、計算がすべて成功してから成果物を一時ファイル経由で書く。設定エラーは終了コード2、前提条件違反は3に変換する。
# Key functions: `main()`, `_parse_args()`, `run_command()`
# Collaboration: 設定は `rgmpnn/config.py`、実験は `rgmpnn/experiments.py`/`rgmpnn/generalization.py`、上界は `rgmpnn/bounds.py`、出力先は `rgmpnn/paths.py` に委譲する。
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from typing import Any, Callable

from . import __version__
from .bounds import bound_report, signal_regularity
from .config import (
    COMMANDS,
    LoadedConfig,
    load_command_config,
    signal_from_dict,
    validate_config,
)
from .errors import ConditionViolatedError, ConfigError, InvalidArgumentError, PreconditionError
from .experiments import (
    build_network,
    run_bound_soundness,
    run_convergence,
    run_degree_concentration,
    run_stability_pair,
)
from .generalization import run_generalization
from .jsonl import append_jsonl, reset_jsonl
from .kernels import RandomGraphModel, graph_to_json, kernel_from_dict, regularity_profile, sample_graph
from .mpnn import LayerConstants, gmpnn_forward, layer_constants
from .paths import RunPaths, atomic_write_text, dumps_json, ensure_dirs, render_csv, write_json
from .plot import loglog_svg
from .seeds import STREAM_NAMES, STREAM_SIGNAL, derive_seed
from .space import space_from_name

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PRECONDITION = 3


def _log(msg: str) -> None:
    print(f"[rgmpnn] {msg}", file=sys.stderr)


@dataclass
class RunOutput:
    summary: dict[str, Any]
    files: dict[str, str] = field(default_factory=dict)
    diagnostics: list[dict[str, Any]] = field(default_factory=list)


def _signal(cfg: Any) -> Any:
    return signal_from_dict(cfg.signal, derive_seed(cfg.seed, STREAM_SIGNAL))


def _sample_graph(loaded: LoadedConfig) -> RunOutput:
    cfg = loaded.config
    space = space_from_name(cfg.space)
    g = sample_graph(RandomGraphModel(kernel_from_dict(cfg.kernel), _signal(cfg), space), cfg.n, cfg.seed)
    reference = None
    if cfg.network:
        reference = gmpnn_forward(build_network(cfg.network, cfg.dims, cfg.seed, cfg.init_scale), g)
    doc = graph_to_json(g, reference)
    print(f"[sample-graph] N={g.n} edges={len(doc['edges_coo'])}", file=sys.stderr)
    summary = {"n": g.n, "edges": len(doc["edges_coo"]), "min_degree": float(g.degrees.min())}
    return RunOutput(summary, {"graph.json": dumps_json(doc)})


def _convergence(loaded: LoadedConfig) -> RunOutput:
    result = run_convergence(loaded.config)
    conv = render_csv(
        ["r", "signal", "trial", "n", "dist_node", "dist_pooled"],
        [(r.r, r.signal, r.trial, r.n, r.dist_node, r.dist_pooled) for r in result.rows],
    )
    slopes = render_csv(
        ["r", "signal", "metric", "slope", "intercept", "residual"],
        [(s.r, s.signal, s.metric, s.slope, s.intercept, s.residual) for s in result.slopes],
    )
    summary = {
        "rows": len(result.rows),
        "slopes": [
            {"r": s.r, "signal": s.signal, "metric": s.metric, "slope": s.slope} for s in result.slopes
        ],
    }
    files = {"convergence.csv": conv, "slopes.csv": slopes, "plot.svg": loglog_svg(result)}
    return RunOutput(summary, files, result.diagnostics)


def _network(cfg: Any) -> Any:
    return build_network(cfg.network, cfg.dims, cfg.seed, cfg.init_scale)


def _stability(loaded: LoadedConfig) -> RunOutput:
    cfg = loaded.config
    result = run_stability_pair(
        kernel_from_dict(cfg.kernel),
        _signal(cfg),
        _network(cfg),
        cfg.n,
        cfg.n_prime,
        cfg.trials,
        cfg.seed,
        p=cfg.p,
        space=space_from_name(cfg.space),
        dudley_c=cfg.dudley_c,
        seed_prime=cfg.seed_prime,
        threads=cfg.threads,
    )
    csv_text = render_csv(
        ["trial", "n", "n_prime", "dist_pooled"],
        [(r.trial, r.n, r.n_prime, r.dist_pooled) for r in result.rows],
    )
    return RunOutput(result.summary(), {"stability.csv": csv_text}, result.diagnostics)


def _bounds(loaded: LoadedConfig) -> RunOutput:
    cfg = loaded.config
    space = space_from_name(cfg.space)
    profile = regularity_profile(kernel_from_dict(cfg.kernel), space, cfg.dudley_c, cfg.grid_res)
    if cfg.layers:
        layers = [LayerConstants(**{k: float(v) for k, v in item.items()}) for item in cfg.layers]
    else:
        layers = layer_constants(_network(cfg))
    report = bound_report(layers, profile, signal_regularity(_signal(cfg)), cfg.p, cfg.n)
    if cfg.n is not None and report.node_bound is None:
        raise ConditionViolatedError(n=cfg.n, required=report.min_n, p=cfg.p)
    doc = report.to_json()
    print(f"[bounds] min_n={report.min_n} node coefficient={report.node_coefficient:.4g}", file=sys.stderr)
    summary = {
        "min_n": report.min_n,
        "node_coefficient": report.node_coefficient,
        "pooled_coefficient": report.pooled_coefficient,
    }
    if report.node_bound is not None and report.pooled is not None:
        summary["node_bound"] = report.node_bound.value
        summary["pooled_bound"] = report.pooled.value
    return RunOutput(summary, {"bound_report.json": dumps_json(doc)})


def _generalization(loaded: LoadedConfig) -> RunOutput:
    result = run_generalization(loaded.config.to_gap_config())
    csv_text = render_csv(
        ["trial", "m", "r_emp", "r_exp", "sq_gap", "bound"],
        [(r.trial, r.m, r.r_emp, r.r_exp, r.sq_gap, r.bound) for r in result.rows],
    )
    return RunOutput(result.summary(), {"gap.csv": csv_text})


def _soundness(loaded: LoadedConfig) -> RunOutput:
    result = run_bound_soundness(loaded.config)
    csv_text = render_csv(
        ["trial", "n", "dist_pooled", "bound", "dominated"],
        [(r.trial, r.n, r.dist_pooled, r.bound, r.dominated) for r in result.rows],
    )
    return RunOutput(result.summary(), {"soundness.csv": csv_text})


def _degrees(loaded: LoadedConfig) -> RunOutput:
    cfg = loaded.config
    result = run_degree_concentration(
        kernel_from_dict(cfg.kernel),
        space_from_name(cfg.space),
        cfg.p,
        cfg.trials,
        cfg.seed,
        cfg.n,
        dudley_c=cfg.dudley_c,
        grid_res=cfg.grid_res,
        threads=cfg.threads,
    )
    csv_text = render_csv(
        ["trial", "n", "min_degree", "half_dmin", "ok"],
        [(r.trial, r.n, r.min_degree, r.half_dmin, r.ok) for r in result.rows],
    )
    return RunOutput(result.summary(), {"degrees.csv": csv_text})


HANDLERS: dict[str, Callable[[LoadedConfig], RunOutput]] = {
    "sample-graph": _sample_graph,
    "convergence": _convergence,
    "stability": _stability,
    "bounds": _bounds,
    "generalization": _generalization,
    "soundness": _soundness,
    "degree-concentration": _degrees,
}


def _manifest(loaded: LoadedConfig, artifacts: list[str]) -> dict[str, Any]:
    return {
        "command": loaded.command,
        "version": __version__,
        "seed": loaded.seed,
        "seeds": {name: derive_seed(loaded.seed, stream) for name, stream in STREAM_NAMES.items()},
        "config": loaded.resolved,
        "artifacts": artifacts + ["manifest.json"],
    }


def _write_outputs(paths: RunPaths, loaded: LoadedConfig, out: RunOutput) -> list[str]:
    names = sorted(out.files)
    for name in names:
        atomic_write_text(paths.artifact(name), out.files[name])
    reset_jsonl(paths.diagnostics_path)
    for item in out.diagnostics:
        append_jsonl(paths.diagnostics_path, item)
    write_json(paths.manifest_path, _manifest(loaded, names))
    return names


def run_command(
    command: str,
    config_path: str | None = None,
    out: str | None = None,
    seed: int | None = None,
    threads: int | None = None,
) -> dict[str, Any]:
    loaded = load_command_config(command, config_path, seed=seed, threads=threads)
    _log(f"{command}: seed={loaded.seed}")
    result = HANDLERS[command](loaded)
    paths = ensure_dirs(out)
    names = _write_outputs(paths, loaded, result)
    _log(f"{command}: wrote {', '.join(names)} to {paths.out_dir}")
    return {"command": command, "out_dir": str(paths.out_dir), "artifacts": names, "summary": result.summary}


def _u64(text: str) -> int:
    val = int(text, 0)
    if val < 0 or val >= 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return val


def _positive_int(text: str) -> int:
    val = int(text)
    if val < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return val


def _parse_args(argv: list[str]) -> argparse.Namespace:
    parser = argparse.ArgumentParser(prog="rgmpnn")
    parser.add_argument("--version", action="version", version=f"rgmpnn {__version__}")
    sub = parser.add_subparsers(dest="cmd", required=True)

    helps = {
        "sample-graph": "Sample one graph from a random graph model and write graph.json",
        "convergence": "Subsample a large graph and fit the log-log error slope",
        "stability": "Pooled distance between independent graphs of two sizes, with the two-graph bound",
        "bounds": "Evaluate every bound constant and write bound_report.json",
        "generalization": "Measure the squared generalization gap next to its bound",
        "soundness": "Check that the pooled bound dominates measured distances",
        "degree-concentration": "Fraction of trials whose minimum node degree stays >= d_min/2",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", default=None, help="JSON config or manifest.json of an earlier run")
        p.add_argument("--out", default=None, help="Output directory (default: $RGMPNN_OUT_DIR or ./rgmpnn-out)")
        p.add_argument("--seed", type=_u64, default=None, help="Master seed override (unsigned 64-bit)")
        p.add_argument("--threads", type=_positive_int, default=None, help="Worker threads (default: $RGMPNN_THREADS)")
        p.add_argument("--json", action="store_true", help="Print a machine-readable summary on stdout")

    p_val = sub.add_parser("validate-config", help="Check a config file against its schema without running")
    p_val.add_argument("path", help="Config JSON path")
    p_val.add_argument("--command", default=None, choices=list(COMMANDS), help="Schema to check against")
    p_val.add_argument("--json", action="store_true", help="Print the report as JSON")
    return parser.parse_args(argv)


def _validate(args: argparse.Namespace) -> int:
    report = validate_config(args.path, args.command)
    if args.json:
        print(json.dumps(report.to_dict(), ensure_ascii=False, indent=2))
    for line in report.errors:
        print(f"[rgmpnn] error: {line}", file=sys.stderr)
    for line in report.warnings:
        print(f"[rgmpnn] warning: {line}", file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_CONFIG


def main(argv: list[str] | None = None) -> int:
    try:
        args = _parse_args(sys.argv[1:] if argv is None else argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_CONFIG
    try:
        if args.cmd == "validate-config":
            return _validate(args)
        summary = run_command(args.cmd, args.config, args.out, args.seed, args.threads)
    except ConfigError as e:
        _log(f"error: {e}")
        return EXIT_CONFIG
    except (PreconditionError, InvalidArgumentError) as e:
        _log(f"error: {e}")
        return EXIT_PRECONDITION
    if args.json:
        print(json.dumps(summary, ensure_ascii=False, indent=2, sort_keys=True, default=str))
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
