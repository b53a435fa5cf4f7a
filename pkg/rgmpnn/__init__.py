# Role: Pythonパッケージ `rgmpnn` のメタ情報（バージョン等）を提供する。
# How: 依存先が `__version__` を参照できるように、最小限の定数だけを公開する。
# Key functions: なし（定数のみ）。
# Collaboration: `rgmpnn/cli.py` がマニフェストにバージョンを書き込むために参照する。
__all__ = ["__version__"]

__version__ = "0.1.0"
