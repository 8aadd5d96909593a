"""Random walk trajectories driven by the environment's conductances.

Transition probabilities from a vertex are proportional to the incident
edge conductances: exp(S(child)) toward each child and exp(S(v)) back to
the parent (the root has no parent edge).  The escape estimator checks the
walk against the network reduction: the chance of hitting level n before
returning to the root equals C_eff(root, level n) divided by the total
conductance at the root.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .environment import EnvSample, SmallNetwork, materialize

DEFAULT_DEPTH_CAP = 1_000
DEFAULT_STEP_CAP = 10_000_000


@dataclass
class WalkState:
    """Trajectory summary counters."""

    position: tuple
    steps: int
    returns_to_root: int
    max_depth_reached: int
    truncated_by_steps: bool = False
    truncated_by_depth: bool = False


@dataclass
class EscapeEstimate:
    estimate: float
    stderr: float
    replicates: int
    truncated: int = 0


def transition_probs(env: EnvSample, v: tuple) -> list:
    """[(neighbor path, probability)] with probabilities summing to 1."""
    s_here = env.s_value(v)
    degs = env.tree.level_degrees(len(v) + 1)
    k = int(degs[env.tree.canonical_index(v)])
    weights = []
    neighbors = []
    if len(v) > 0:
        neighbors.append(tuple(v[:-1]))
        weights.append(math.exp(s_here))
    for slot in range(k):
        child = tuple(v) + (slot,)
        neighbors.append(child)
        weights.append(math.exp(s_here + env.x_value(child)))
    total = sum(weights)
    return [(nb, w / total) for nb, w in zip(neighbors, weights)]


def _transition_tables(net: SmallNetwork):
    """Padded neighbor/cumulative-weight matrices for batched stepping."""
    size = net.size
    maxdeg = int(net.child_count.max()) + 1
    neighbors = np.zeros((size, maxdeg), dtype=np.int64)
    weights = np.zeros((size, maxdeg))
    conduct = np.exp(net.s)  # conductance of the edge above each vertex
    for i in range(size):
        cols = 0
        if net.parent[i] >= 0:
            neighbors[i, 0] = net.parent[i]
            weights[i, 0] = conduct[i]
            cols = 1
        c0, k = net.child_start[i], net.child_count[i]
        for j in range(k):
            neighbors[i, cols + j] = c0 + j
            weights[i, cols + j] = conduct[c0 + j]
        cols += k
        if cols:
            weights[i, :cols] /= weights[i, :cols].sum()
    cum = np.cumsum(weights, axis=1)
    cum[:, -1] = 1.0
    return neighbors, cum


def escape_probability_mc(
    env: EnvSample,
    n: int,
    replicates: int,
    stream: np.random.Generator,
    step_cap: int = DEFAULT_STEP_CAP,
) -> EscapeEstimate:
    """Fraction of walks from the root that hit level n before returning.

    Batched over replicates; a replicate that exceeds the per-batch step
    cap is counted (and reported) as truncated, not silently dropped.
    """
    if n < 1:
        raise ValueError("escape experiment needs n >= 1")
    net = materialize(env, n)
    neighbors, cum = _transition_tables(net)
    level_n_start = net.level_start[n]

    pos = np.zeros(replicates, dtype=np.int64)  # all start at the root
    escaped = 0
    finished = 0
    truncated = 0
    steps_taken = 0
    while len(pos):
        if steps_taken >= step_cap:
            truncated = len(pos)
            break
        u = stream.random(len(pos))
        choice = (u[:, None] >= cum[pos]).sum(axis=1)
        pos = neighbors[pos, choice]
        steps_taken += len(pos)
        # The first move from the root cannot revisit it, so checking after
        # every step never miscounts the start as a return.
        done_root = pos == 0
        done_esc = pos >= level_n_start
        done = done_root | done_esc
        if done.any():
            escaped += int(done_esc.sum())
            finished += int(done.sum())
            pos = pos[~done]
    total = finished
    if total == 0:
        return EscapeEstimate(estimate=float("nan"), stderr=float("nan"),
                              replicates=replicates, truncated=truncated)
    p = escaped / total
    stderr = math.sqrt(max(p * (1.0 - p), 1.0 / total) / total)
    return EscapeEstimate(estimate=p, stderr=stderr, replicates=replicates,
                          truncated=truncated)


def escape_probability_network(env: EnvSample, n: int) -> float:
    """Network prediction C_eff(root, level n) / C_root for the escape chance."""
    from .environment import effective_conductance, root_conductance

    return effective_conductance(env, n) / root_conductance(env)


def simulate_walk(
    env: EnvSample,
    steps: int,
    depth_cap: int = DEFAULT_DEPTH_CAP,
    stream: np.random.Generator | None = None,
) -> WalkState:
    """Single trajectory from the root with return/depth diagnostics.

    Uses cached per-vertex transition tables keyed by path, so memory grows
    with the number of distinct visited vertices only.
    """
    if stream is None:
        raise ValueError("simulate_walk needs an explicit stream")
    cache: dict = {}
    v: tuple = ()
    returns = 0
    max_depth = 0
    truncated_by_depth = False
    for step in range(steps):
        if v not in cache:
            probs = transition_probs(env, v)
            nbs = [nb for nb, _ in probs]
            cw = np.cumsum([p for _, p in probs])
            cw[-1] = 1.0
            cache[v] = (nbs, cw)
        nbs, cw = cache[v]
        v = nbs[int(np.searchsorted(cw, stream.random(), side="right"))]
        max_depth = max(max_depth, len(v))
        if len(v) == 0:
            returns += 1
        if len(v) >= depth_cap:
            truncated_by_depth = True
            return WalkState(v, step + 1, returns, max_depth,
                             truncated_by_depth=True)
    return WalkState(v, steps, returns, max_depth,
                     truncated_by_steps=True, truncated_by_depth=truncated_by_depth)
