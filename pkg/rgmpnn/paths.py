# Role: 実行結果の出力先（out/manifest/diagnostics）を一箇所で定義し、成果物を原子的に書き出す。
# How: `--out` > 環境変数 `RGMPNN_OUT_DIR` > `./rgmpnn-out` の順で出力先を決め、書き込みは同じディレクトリの一時ファイルに書いてから `os.replace` する。
# Key functions: `get_paths()`, `ensure_dirs()`, `atomic_write_text()`, `write_json()`, `write_csv()`
# Collaboration: cli が全コマンドの成果物（CSV/JSON/SVG/manifest）をここ経由で書き、jsonl が diagnostics の追記先に使う。
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

DEFAULT_OUT_DIRNAME = "rgmpnn-out"


@dataclass(frozen=True)
class RunPaths:
    out_dir: Path
    manifest_path: Path
    diagnostics_path: Path

    def artifact(self, name: str) -> Path:
        return self.out_dir / name


def _out_dir_override() -> Path | None:
    val = (os.environ.get("RGMPNN_OUT_DIR") or "").strip()
    if not val:
        return None
    return Path(val).expanduser()


def get_paths(out: str | Path | None = None) -> RunPaths:
    if out:
        out_dir = Path(out).expanduser()
    else:
        out_dir = _out_dir_override() or Path.cwd() / DEFAULT_OUT_DIRNAME
    return RunPaths(
        out_dir=out_dir,
        manifest_path=out_dir / "manifest.json",
        diagnostics_path=out_dir / "diagnostics.jsonl",
    )


def ensure_dirs(out: str | Path | None = None) -> RunPaths:
    paths = get_paths(out)
    paths.out_dir.mkdir(parents=True, exist_ok=True)
    return paths


def atomic_write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=str(path.parent))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
    return path


def dumps_json(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def write_json(path: Path, obj: Any) -> Path:
    return atomic_write_text(path, dumps_json(obj))


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(header))
    for row in rows:
        # floats go through repr, so values round-trip exactly
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    return atomic_write_text(path, render_csv(header, rows))
