"""Deterministic, splittable randomness keyed by tree paths and experiment tags.

Every random quantity in this package is a pure function of an explicit
64-bit seed plus a structural key (a vertex path, or an experiment tag
tuple).  Vertex values use a SplitMix64-style chain folded along the path,
which vectorizes level-by-level; experiment streams use keyed BLAKE2b so
that (experiment, c, n, replicate) cells are reproducible in isolation.
"""

from __future__ import annotations

import hashlib

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_ROOT_SALT = np.uint64(0x243F6A8885A308D3)
_VALUE_SALT = np.uint64(0x452821E638D01377)

_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_INV53 = float(2.0 ** -53)


def mix64(z):
    """SplitMix64 finalizer; accepts a uint64 scalar or array."""
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


def root_state(seed: int) -> np.uint64:
    """State of the root vertex for a given environment seed."""
    return np.uint64(mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) ^ _ROOT_SALT))


def fold_child(state, slot):
    """State of the child reached from `state` via child index `slot`."""
    slot = np.asarray(slot, dtype=np.uint64)
    return mix64(np.asarray(state, dtype=np.uint64) ^ mix64((slot + _ONE) * _GOLDEN))


def child_states(states: np.ndarray, degrees: np.ndarray) -> np.ndarray:
    """Vectorized expansion of one level's states into the next level's.

    Children are ordered canonically: all children of vertex 0, then of
    vertex 1, and so on; the slot index restarts at 0 for each parent.
    """
    degrees = np.asarray(degrees, dtype=np.int64)
    rep = np.repeat(np.asarray(states, dtype=np.uint64), degrees)
    total = int(degrees.sum())
    starts = np.repeat(np.cumsum(degrees) - degrees, degrees)
    slots = np.arange(total, dtype=np.uint64) - starts.astype(np.uint64)
    return fold_child(rep, slots)


def uniform_from_state(states) -> np.ndarray:
    """Map vertex states to i.i.d.-quality uniforms in [0, 1)."""
    u = mix64(np.asarray(states, dtype=np.uint64) ^ _VALUE_SALT) >> _S11
    return u.astype(np.float64) * _INV53


def state_for_path(seed: int, path) -> np.uint64:
    """State of the vertex addressed by `path` (sequence of child indices)."""
    state = root_state(seed)
    for slot in path:
        state = np.uint64(fold_child(state, np.uint64(slot)))
    return state


def derive_seed(master_seed: int, *tags) -> int:
    """Stable 64-bit subseed for an experiment cell.

    Tags are serialized via repr, so ints, floats and short strings give
    platform-independent results.
    """
    key = int(master_seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
    payload = "\x1f".join(repr(t) for t in tags).encode()
    digest = hashlib.blake2b(payload, key=key, digest_size=8).digest()
    return int.from_bytes(digest, "little")


def substream(master_seed: int, *tags) -> np.random.Generator:
    """Independent numpy Generator for an experiment cell."""
    return np.random.Generator(np.random.PCG64(derive_seed(master_seed, *tags)))
