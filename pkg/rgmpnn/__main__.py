# Role: `python -m rgmpnn` で CLI を起動する。
# How: `rgmpnn.cli.main()` の戻り値をそのまま終了コードにする。
# Key functions: なし
# Collaboration: `rgmpnn/cli.py` に委譲する。
from .cli import main

raise SystemExit(main())
