"""Random environments on trees: S-values, bottleneck sums, conductances.

An EnvSample pins (tree, distribution, seed).  The increment X(sigma) at a
vertex is a pure function of the seed and the vertex's path, obtained by
folding a SplitMix64 state down the path and mapping the resulting uniform
through the distribution's inverse CDF.  Nothing is stored: levels of
exponential size are traversed as numpy arrays, one level at a time.

Key identities (with S the path sum of X and root S = 0):
  * edge (parent, v) has conductance exp(S(v)), resistance exp(-S(v));
  * U(v) = exp(min over path prefixes of S), the path bottleneck;
  * conductance root -> level n follows the series-parallel recursion
        C(v) = sum over children w of 1 / (exp(-S(w)) + 1/C(w)).
    We iterate its normalized form G(v) = C(v) exp(-S(v)),
        G(v) = sum_w exp(X(w)) * G(w) / (1 + G(w)),   G = inf past level n,
    which never touches absolute S and so cannot overflow however deep
    the tree (this replaces explicit log-domain bookkeeping).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .distributions import EnvDistribution, Lattice
from .trees import Tree


@dataclass(frozen=True)
class EnvSample:
    """Deterministic seeded assignment of increments X to tree vertices."""

    tree: Tree
    dist: EnvDistribution
    seed: int

    def uniform_for_vertex(self, v) -> float:
        """The underlying uniform driving X at vertex v (for statistical checks)."""
        state = rng.state_for_path(self.seed, v)
        return float(rng.uniform_from_state(np.asarray([state]))[0])

    def x_value(self, v) -> float:
        """Increment X at vertex v (v must not be the root)."""
        if len(v) == 0:
            raise ValueError("the root carries no increment")
        return float(self.dist.quantile(self.uniform_for_vertex(v)))

    def s_values_along(self, v) -> np.ndarray:
        """S at every prefix of the path to v (depths 1..|v|)."""
        state = rng.root_state(self.seed)
        out = np.empty(len(v))
        s = 0.0
        for i, slot in enumerate(v):
            state = np.uint64(rng.fold_child(state, np.uint64(slot)))
            u = rng.uniform_from_state(np.asarray([state]))[0]
            s += float(self.dist.quantile(u))
            out[i] = s
        return out

    def s_value(self, v) -> float:
        """S(v) = sum of X along the path from the root; S(root) = 0."""
        if len(v) == 0:
            return 0.0
        return float(self.s_values_along(v)[-1])

    def u_value(self, v) -> float:
        """U(v) = min over nonempty path prefixes of exp(S); requires v != root."""
        if len(v) == 0:
            raise ValueError("U is undefined at the root")
        return float(math.exp(self.s_values_along(v).min()))


def _level_x(env: EnvSample, states: np.ndarray) -> np.ndarray:
    return env.dist.quantile(rng.uniform_from_state(states))


def iter_levels(env: EnvSample, n: int, with_min: bool = False):
    """Yield (depth, states, x, s[, min_s]) arrays for depths 1..n."""
    states = np.asarray([rng.root_state(env.seed)])
    s = np.zeros(1)
    min_s = np.full(1, np.inf)
    for d in range(1, n + 1):
        degs = env.tree.level_degrees(d)
        states = rng.child_states(states, degs)
        x = _level_x(env, states)
        s = np.repeat(s, degs) + x
        if with_min:
            min_s = np.minimum(np.repeat(min_s, degs), s)
            yield d, states, x, s, min_s
        else:
            yield d, states, x, s


def bottleneck_stat(env: EnvSample, n: int) -> float:
    """Sum over the level-n vertices of the path bottleneck U(sigma)."""
    if n < 1:
        raise ValueError("bottleneck statistic needs n >= 1")
    for d, _, _, _, min_s in iter_levels(env, n, with_min=True):
        if d == n:
            return float(np.sum(np.exp(min_s)))
    raise AssertionError("unreachable")


def effective_conductance(env: EnvSample, n: int) -> float:
    """Effective conductance from the root to level n.

    Downward pass samples and stores each level's increments (atom codes
    for lattice laws, floats otherwise); upward pass runs the normalized
    series-parallel recursion.
    """
    if n < 1:
        raise ValueError("effective conductance needs n >= 1")
    tree, dist = env.tree, env.dist
    lattice_codes = isinstance(dist, Lattice) and len(dist.values) <= 256
    exp_table = np.exp(np.asarray(dist.values)) if lattice_codes else None

    stored = []
    states = np.asarray([rng.root_state(env.seed)])
    for d in range(1, n + 1):
        degs = tree.level_degrees(d)
        states = rng.child_states(states, degs)
        u = rng.uniform_from_state(states)
        if lattice_codes:
            stored.append(dist.quantile_index(u).astype(np.uint8))
        else:
            stored.append(dist.quantile(u))
    del states

    ratio = np.ones(tree.level_size(n))  # G/(1+G) with G = inf at level n
    for d in range(n, 0, -1):
        ex = exp_table[stored[d - 1]] if lattice_codes else np.exp(stored[d - 1])
        w = ex * ratio
        degs = tree.level_degrees(d)
        starts = np.cumsum(degs) - degs
        g = np.add.reduceat(w, starts)
        stored[d - 1] = None  # free as we go
        if d == 1:
            return float(g[0])
        ratio = np.where(np.isinf(g), 1.0, g / (1.0 + g))
    raise AssertionError("unreachable")


def bottleneck_and_conductance(env: EnvSample, n: int) -> tuple[float, float]:
    """Both level-n statistics from one shared downward pass.

    Cheaper than calling bottleneck_stat and effective_conductance
    separately on large trees; results are bit-identical to the
    single-statistic functions.
    """
    if n < 1:
        raise ValueError("statistics need n >= 1")
    tree, dist = env.tree, env.dist
    lattice_codes = isinstance(dist, Lattice) and len(dist.values) <= 256
    exp_table = np.exp(np.asarray(dist.values)) if lattice_codes else None

    stored = []
    states = np.asarray([rng.root_state(env.seed)])
    s = np.zeros(1)
    min_s = np.full(1, np.inf)
    for d in range(1, n + 1):
        degs = tree.level_degrees(d)
        states = rng.child_states(states, degs)
        u = rng.uniform_from_state(states)
        if lattice_codes:
            code = dist.quantile_index(u).astype(np.uint8)
            x = np.asarray(dist.values)[code]
            stored.append(code)
        else:
            x = dist.quantile(u)
            stored.append(x)
        s = np.repeat(s, degs) + x
        min_s = np.minimum(np.repeat(min_s, degs), s)
    del states, s
    u_n = float(np.sum(np.exp(min_s)))
    del min_s

    ratio = np.ones(tree.level_size(n))
    for d in range(n, 0, -1):
        ex = exp_table[stored[d - 1]] if lattice_codes else np.exp(stored[d - 1])
        w = ex * ratio
        degs = tree.level_degrees(d)
        starts = np.cumsum(degs) - degs
        g = np.add.reduceat(w, starts)
        stored[d - 1] = None
        if d == 1:
            return u_n, float(g[0])
        ratio = np.where(np.isinf(g), 1.0, g / (1.0 + g))
    raise AssertionError("unreachable")


def root_conductance(env: EnvSample) -> float:
    """Total conductance at the root: sum of exp(S) over its children."""
    for _, _, _, s in iter_levels(env, 1):
        return float(np.sum(np.exp(s)))
    raise AssertionError("unreachable")


@dataclass
class SmallNetwork:
    """Dense materialization of an environment to a given depth.

    Intended for desk-scale trees (oracles, walk simulation); arrays are
    indexed by BFS order with the root at 0.
    """

    depth: int
    level_start: np.ndarray  # index of the first vertex of each level
    parent: np.ndarray  # parent index; -1 for the root
    child_start: np.ndarray
    child_count: np.ndarray
    s: np.ndarray  # S(v); 0 at the root
    x: np.ndarray  # X(v); 0 at the root

    @property
    def size(self) -> int:
        return len(self.parent)

    def vertex_depth(self, i: int) -> int:
        return int(np.searchsorted(self.level_start, i, side="right") - 1)


def materialize(env: EnvSample, n: int, max_vertices: int = 2_000_000) -> SmallNetwork:
    """Flatten levels 0..n of the environment into a SmallNetwork."""
    sizes = [env.tree.level_size(d) for d in range(n + 1)]
    total = int(sum(sizes))
    if total > max_vertices:
        raise MemoryError(f"{total} vertices exceeds materialization cap {max_vertices}")
    level_start = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    parent = np.full(total, -1, dtype=np.int64)
    child_start = np.zeros(total + 1, dtype=np.int64)
    child_count = np.zeros(total, dtype=np.int64)
    s_all = np.zeros(total)
    x_all = np.zeros(total)
    for d, _, x, s in iter_levels(env, n):
        lo, hi = level_start[d], level_start[d + 1]
        s_all[lo:hi] = s
        x_all[lo:hi] = x
        degs = env.tree.level_degrees(d)
        plo = level_start[d - 1]
        parent[lo:hi] = plo + np.repeat(np.arange(len(degs)), degs)
        child_count[plo : plo + len(degs)] = degs
    child_start[1:] = np.cumsum(child_count)
    return SmallNetwork(
        depth=n,
        level_start=level_start,
        parent=parent,
        child_start=child_start[:-1],
        child_count=child_count,
        s=s_all,
        x=x_all,
    )
