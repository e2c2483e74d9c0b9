"""Seeding conventions.

Every random stream in the package is a numpy ``Generator`` over PCG64,
whose output is specified bit-for-bit and is identical on every platform.
Independent streams are split off a 64-bit seed with ``SeedSequence``:

* ``stream(seed, "gen")`` drives CDC generation, ``"uniform"`` plain random 3-SAT,
* ``stream(seed, "init")`` draws the solver's initial voltages,
* ``stream(seed, "walksat")`` drives WalkSAT,
* ``derive_seed(base, n, index)`` gives the 64-bit seed of instance
  ``index`` at size ``n`` in a sweep, so results never depend on the order
  in which workers pick up runs.
"""

from __future__ import annotations

import zlib

import numpy as np

MASK64 = (1 << 64) - 1


def _purpose_key(purpose: str) -> int:
    return zlib.crc32(purpose.encode())


def stream(seed: int, purpose: str) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & MASK64, spawn_key=(_purpose_key(purpose),))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(base: int, *keys: int) -> int:
    ss = np.random.SeedSequence(int(base) & MASK64, spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
