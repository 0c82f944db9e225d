"""Deterministic randomness: one 64-bit master seed drives everything.

Monte Carlo replicas use numpy Philox generators keyed (seed, replica), so
replica i's configuration is independent of batching and of execution order.
The backward Ising exploration needs randomness addressable by (vertex, mark
index, channel); that uses a splitmix64 hash chain, cheap enough to call per
draw from Python.
"""

from __future__ import annotations

import math

import numpy as np

_MASK = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def mix(*keys: int) -> int:
    """Hash a tuple of signed integers into a 64-bit state."""
    z = 0x243F6A8885A308D3
    for k in keys:
        z = _splitmix64((z ^ (k & _MASK)) & _MASK)
    return z


def u01(*keys: int) -> float:
    """Uniform in [0, 1) keyed by the arguments, deterministic."""
    return (mix(*keys) >> 11) * (1.0 / (1 << 53))


def exponential(*keys: int) -> float:
    u = u01(*keys)
    return -math.log1p(-u)


def coin(*keys: int) -> int:
    """Fair +-1."""
    return 1 if mix(*keys) & 1 else -1


def replica_rng(seed: int, replica: int, *context: int) -> np.random.Generator:
    """Philox generator for one Monte Carlo replica (order-independent)."""
    return np.random.Generator(np.random.Philox(key=mix(seed, replica, *context)))


# channel tags for the backward Ising exploration
CH_GAP, CH_EPS, CH_OMEGA, CH_U, CH_COIN = range(5)
