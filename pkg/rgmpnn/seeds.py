# Role: マスターシードから用途別のサブシードを導出する。
# How: `numpy.random.SeedSequence(entropy=seed, spawn_key=stream)` で独立ストリームを作り、先頭64bitを新しいシードとして返す。
# Key functions: `derive_seed()`, `rng_from()`
# Collaboration: kernels/signals/experiments/generalization が、同じノード配置に別の信号を載せるなどの再現性のために使う。
from __future__ import annotations

import numpy as np

from .errors import InvalidArgumentError

STREAM_POSITIONS = 1
STREAM_FEATURES = 2
STREAM_SUBSAMPLE = 3
STREAM_TRIAL = 4
STREAM_PAIR = 5
STREAM_SIGNAL = 6
STREAM_NETWORK = 7
STREAM_TRAINING = 8
STREAM_RISK = 9

STREAM_NAMES = {
    "positions": STREAM_POSITIONS,
    "features": STREAM_FEATURES,
    "subsample": STREAM_SUBSAMPLE,
    "trial": STREAM_TRIAL,
    "pair": STREAM_PAIR,
    "signal": STREAM_SIGNAL,
    "network": STREAM_NETWORK,
    "training": STREAM_TRAINING,
    "risk": STREAM_RISK,
}


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if seed < 0 or seed >= 2**64:
        raise InvalidArgumentError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def derive_seed(seed: int, *stream: int) -> int:
    ss = np.random.SeedSequence(entropy=_check_seed(seed), spawn_key=tuple(int(s) for s in stream))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def rng_from(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=_check_seed(seed)))
