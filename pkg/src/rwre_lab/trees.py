"""Trees: explicit finite, b-ary, and growth-targeted with |level n| =
max(1, floor(exp(beta*n + c*n^(1/3)))).

Vertices are addressed by their path from the root (a tuple of child
indices), so the tree never has to be materialized: the child count of
any vertex is a pure function of (spec, depth, canonical index).  Within
a level of a growth-target tree child counts differ by at most 1 and the
larger counts come first, so two materializations agree vertex-for-vertex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, ConfigError

DEFAULT_LEVEL_BUDGET = 10_000_000

VertexId = tuple  # path of child indices from the root; depth == len(path)


def meet(a, b) -> tuple:
    """Greatest common ancestor of two vertices: longest common path prefix."""
    k = 0
    for x, y in zip(a, b):
        if x != y:
            break
        k += 1
    return tuple(a[:k])


def depth(v) -> int:
    return len(v)


@dataclass(frozen=True)
class TreeSpec:
    """Description of a tree; see the classmethod constructors."""

    kind: str  # "explicit" | "b-ary" | "growth-target"
    b: int = 0
    beta: float = 0.0
    c: float = 0.0
    max_depth: int | None = None
    children: tuple = ()  # explicit only: children[i] = tuple of child ids

    @classmethod
    def bary(cls, b: int, max_depth: int | None = None) -> "TreeSpec":
        if b < 2:
            raise ConfigError("b-ary branching must satisfy b >= 2")
        return cls(kind="b-ary", b=int(b), max_depth=max_depth)

    @classmethod
    def growth(cls, beta: float, c: float, max_depth: int) -> "TreeSpec":
        if beta < 0:
            raise ConfigError("growth-target beta must be >= 0")
        if max_depth < 1:
            raise ConfigError("growth-target max_depth must be >= 1")
        return cls(kind="growth-target", beta=float(beta), c=float(c),
                   max_depth=int(max_depth))

    @classmethod
    def explicit(cls, parents: dict) -> "TreeSpec":
        """From {vertex_id: parent_id}; the root is the vertex with parent -1."""
        kids: dict = {v: [] for v in parents}
        root = None
        for v, p in parents.items():
            if p == -1:
                root = v
            else:
                if p not in kids:
                    raise ConfigError(f"vertex {v} has unknown parent {p}")
                kids[p].append(v)
        if root is None:
            raise ConfigError("explicit tree has no root (parent -1)")
        for v in kids:
            kids[v].sort()
        order = {root: ()}
        levels = [[root]]
        while True:
            nxt = []
            for v in levels[-1]:
                for slot, w in enumerate(kids[v]):
                    order[w] = order[v] + (slot,)
                    nxt.append(w)
            if not nxt:
                break
            levels.append(nxt)
        children = tuple(tuple(kids[v] for v in level) for level in levels)
        md = min(
            (len(p) for v, p in order.items() if not kids[v]),
            default=len(levels) - 1,
        )
        return cls(kind="explicit", max_depth=md, children=children)


def growth_count(spec: TreeSpec, n: int) -> int:
    """Exact |level n|; raises BudgetError past max_depth."""
    if n < 0:
        raise ConfigError("level index must be >= 0")
    if n == 0:
        return 1
    if spec.max_depth is not None and n > spec.max_depth:
        raise BudgetError(f"level {n} exceeds max depth {spec.max_depth}")
    if spec.kind == "b-ary":
        return spec.b**n
    if spec.kind == "growth-target":
        return max(1, math.floor(math.exp(spec.beta * n + spec.c * n ** (1.0 / 3.0))))
    if spec.kind == "explicit":
        # children stores, per level-(n-1) vertex, the tuple of child ids
        return sum(len(ch) for ch in spec.children[n - 1])
    raise ConfigError(f"unknown tree kind {spec.kind!r}")


def level_degrees(spec: TreeSpec, n: int, budget: int = DEFAULT_LEVEL_BUDGET) -> np.ndarray:
    """Child counts of the level-(n-1) vertices, in canonical order.

    For growth-target trees the counts realize |level n| with a spread of
    at most 1; larger counts come first.
    """
    if n < 1:
        raise ConfigError("level_degrees needs n >= 1")
    m = growth_count(spec, n - 1)
    total = growth_count(spec, n)
    if max(m, total) > budget:
        raise BudgetError(f"level {n} has {total} vertices; budget {budget}")
    if spec.kind == "b-ary":
        return np.full(m, spec.b, dtype=np.int64)
    if spec.kind == "growth-target":
        if total < m:
            raise ConfigError(
                f"growth target shrinks from {m} to {total} at level {n}; "
                "a leafless tree cannot realize it"
            )
        q, r = divmod(total, m)
        out = np.full(m, q, dtype=np.int64)
        out[:r] += 1
        return out
    if spec.kind == "explicit":
        return np.array([len(ch) for ch in spec.children[n - 1]], dtype=np.int64)
    raise ConfigError(f"unknown tree kind {spec.kind!r}")


class Tree:
    """A TreeSpec plus a per-level vertex budget; the lazy traversal handle."""

    def __init__(self, spec: TreeSpec, level_budget: int = DEFAULT_LEVEL_BUDGET):
        self.spec = spec
        self.level_budget = int(level_budget)

    def level_size(self, n: int) -> int:
        return growth_count(self.spec, n)

    def level_degrees(self, n: int) -> np.ndarray:
        return level_degrees(self.spec, n, self.level_budget)

    @property
    def max_depth(self):
        return self.spec.max_depth

    def num_children(self, v: tuple) -> int:
        """Child count of the vertex addressed by path v."""
        d = len(v)
        degs = self.level_degrees(d + 1)
        return int(degs[self.canonical_index(v)])

    def canonical_index(self, v: tuple) -> int:
        """BFS position of v within its level, given canonical child order."""
        idx = 0
        for d, slot in enumerate(v):
            degs = self.level_degrees(d + 1)
            if not (0 <= slot < degs[idx]):
                raise ConfigError(f"path {v} invalid: slot {slot} at depth {d}")
            starts = np.cumsum(degs) - degs
            idx = int(starts[idx]) + slot
        return idx


def read_explicit(path: str) -> TreeSpec:
    """Explicit tree from a text file of `id parent_id` lines (root parent -1)."""
    parents = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ConfigError(f"bad tree line {line!r}")
            parents[int(parts[0])] = int(parts[1])
    return TreeSpec.explicit(parents)


def parse_tree(block: dict) -> TreeSpec:
    """Build a tree spec from a key=value config block."""
    try:
        kind = block["kind"].strip()
    except KeyError:
        raise ConfigError("tree block missing field 'kind'") from None
    if kind in ("b-ary", "bary"):
        if "b" not in block:
            raise ConfigError("b-ary tree missing field 'b'")
        md = int(block["max_depth"]) if "max_depth" in block else None
        return TreeSpec.bary(int(block["b"]), md)
    if kind in ("growth-target", "growth"):
        for fieldname in ("beta", "c", "max_depth"):
            if fieldname not in block:
                raise ConfigError(f"growth-target tree missing field {fieldname!r}")
        return TreeSpec.growth(
            float(block["beta"]), float(block["c"]), int(block["max_depth"])
        )
    if kind == "explicit":
        if "file" not in block:
            raise ConfigError("explicit tree missing field 'file'")
        return read_explicit(block["file"])
    raise ConfigError(f"unknown tree kind {kind!r}")
