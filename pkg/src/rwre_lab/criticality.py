"""Explicit constants and survival statistics for the phase experiments.

This module packages the closed-form large-deviation bounds, the critical
growth constant c1 (the supremum of c for which
c + 2 lam0 (1-lam0)^{-1} c - (pi^2/8) 3V / (2c/lam0 + 2c/(1-lam0))^2
is negative), the capacity-gauge constant c2(c, M), survivor-set counting
inside the band [c k^(1/3)/10, c k^(1/3)], the Paley-Zygmund lower bound,
and the empirical Harnack-type ratio for conditioned tube probabilities.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import rng
from .distributions import EnvDistribution, Lattice, PushProfile, push_profile
from .environment import EnvSample
from .errors import BudgetError, ConfigError
from .trees import Tree, TreeSpec, growth_count
from .tubes import (
    BAND_SLACK,
    TubeSpec,
    ln_tube_prob_exact_lattice,
    tube_prob_mc,
)

POPULATION_CAP = 10_000_000


@dataclass(frozen=True)
class CriticalReport:
    """Reference constants for one environment law."""

    profile: PushProfile
    c1: float
    band_lower_factor: float  # band is [c * k^(1/3) / 10, c * k^(1/3)]
    notes: str = ""

    def c2(self, c: float, M: float) -> float:
        return c2_constant(self.profile, c, M)


def ld_bounds(profile: PushProfile, n: int, u: float, y: float):
    """The three closed-form large-deviation bounds (i), (ii), (iii).

    (i)   P(S_n >= u)            <= exp(-beta n - lam0 u)
    (ii)  E e^{S_n} 1{S_n <= y}  <= (1-lam0)^{-1} exp((1-lam0) y - beta n)
    (iii) E e^{S_n /\\ y}         <= [1+(1-lam0)^{-1}] exp((1-lam0) y - beta n)
    With lam0 = 1 the last two are vacuous and reported as +inf.
    """
    beta, lam0 = profile.beta, profile.lambda0
    bound_i = math.exp(-beta * n - lam0 * u)
    if lam0 >= 1.0:
        return bound_i, math.inf, math.inf
    common = math.exp((1.0 - lam0) * y - beta * n)
    inv = 1.0 / (1.0 - lam0)
    return bound_i, inv * common, (1.0 + inv) * common


def _c1_lhs(c: float, lam0: float, V: float) -> float:
    denom = 2.0 * c / lam0 + 2.0 * c / (1.0 - lam0)
    return c + 2.0 * lam0 / (1.0 - lam0) * c - (math.pi**2 / 8.0) * 3.0 * V / denom**2


def c1_closed_form(lam0: float, V: float) -> float:
    big_d = 2.0 / lam0 + 2.0 / (1.0 - lam0)
    k = 1.0 + 2.0 * lam0 / (1.0 - lam0)
    return ((3.0 * math.pi**2 * V / 8.0) / (big_d**2 * k)) ** (1.0 / 3.0)


def c1_critical(profile: PushProfile) -> float:
    """Supremum of c > 0 with a negative left side, located by bisection.

    The bisection must agree with the cube-root closed form to 1e-8;
    disagreement indicates a numerical defect and raises.
    """
    if not profile.top_heavy:
        raise ConfigError("c1 requires a top-heavy profile")
    lam0, V = profile.lambda0, profile.tilted_variance
    if not V > 0:
        raise ConfigError("c1 requires positive tilted variance")
    lo, hi = 1e-12, 1.0
    while _c1_lhs(hi, lam0, V) < 0:
        hi *= 2.0
        if hi > 1e9:
            raise ArithmeticError("c1 bisection failed to bracket")
    for _ in range(200):
        if hi - lo <= 1e-10:
            break
        mid = 0.5 * (lo + hi)
        if _c1_lhs(mid, lam0, V) < 0:
            lo = mid
        else:
            hi = mid
    c1 = 0.5 * (lo + hi)
    closed = c1_closed_form(lam0, V)
    if abs(c1 - closed) > 1e-8:
        raise ArithmeticError(
            f"c1 bisection {c1!r} disagrees with closed form {closed!r}"
        )
    return c1


def c2_constant(profile: PushProfile, c: float, M: float) -> float:
    """M + 2 c lam0 + (pi^2/8) 3V / (0.9 c)^2 for the capacity gauge."""
    if c <= 0:
        raise ConfigError("c2 needs c > 0")
    lam0, V = profile.lambda0, profile.tilted_variance
    return M + 2.0 * c * lam0 + (math.pi**2 / 8.0) * 3.0 * V / (0.9 * c) ** 2


def critical_report(dist: EnvDistribution, notes: str = "") -> CriticalReport:
    prof = push_profile(dist)
    return CriticalReport(
        profile=prof, c1=c1_critical(prof), band_lower_factor=0.1, notes=notes
    )


def _degrees_at(spec: TreeSpec, d: int, idx: np.ndarray, budget: int) -> np.ndarray:
    """Child counts at level d for the level-(d-1) vertices with canonical
    indices `idx`, without materializing the level."""
    if spec.kind == "b-ary":
        return np.full(len(idx), spec.b, dtype=np.int64)
    if spec.kind == "growth-target":
        m = growth_count(spec, d - 1)
        total = growth_count(spec, d)
        if total > budget:
            raise BudgetError(f"level {d} has {total} vertices; budget {budget}")
        q, r = divmod(total, m)
        return q + (idx < r).astype(np.int64)
    if spec.kind == "explicit":
        counts = np.array([len(ch) for ch in spec.children[d - 1]], dtype=np.int64)
        return counts[idx]
    raise ConfigError(f"unknown tree kind {spec.kind!r}")


def _child_start_at(spec: TreeSpec, d: int, idx: np.ndarray) -> np.ndarray:
    """Canonical index of the first child of each `idx` vertex."""
    if spec.kind == "b-ary":
        return idx * spec.b
    if spec.kind == "growth-target":
        m = growth_count(spec, d - 1)
        total = growth_count(spec, d)
        q, r = divmod(total, m)
        return q * idx + np.minimum(idx, r)
    if spec.kind == "explicit":
        counts = np.array([len(ch) for ch in spec.children[d - 1]], dtype=np.int64)
        starts = np.cumsum(counts) - counts
        return starts[idx]
    raise ConfigError(f"unknown tree kind {spec.kind!r}")


def _pruned_frontier(
    env: EnvSample,
    n: int,
    keep,
    population_cap: int = POPULATION_CAP,
):
    """Expand levels 1..n keeping only vertices with keep(d, s) True.

    keep receives the depth and the S array of the freshly expanded level
    and returns a boolean mask; descendants of dropped vertices are never
    generated.  Returns the surviving count at level n.
    """
    spec = env.tree.spec
    idx = np.zeros(1, dtype=np.int64)
    states = np.asarray([rng.root_state(env.seed)])
    s = np.zeros(1)
    for d in range(1, n + 1):
        if len(idx) == 0:
            return 0
        degs = _degrees_at(spec, d, idx, env.tree.level_budget)
        total = int(degs.sum())
        if total > population_cap:
            raise BudgetError(f"pruned frontier would hold {total} vertices")
        starts = _child_start_at(spec, d, idx)
        slots = np.arange(total, dtype=np.int64) - np.repeat(
            np.cumsum(degs) - degs, degs
        )
        idx = np.repeat(starts, degs) + slots
        states = rng.child_states(states, degs)
        s = np.repeat(s, degs) + env.dist.quantile(rng.uniform_from_state(states))
        mask = keep(d, s)
        if not mask.all():
            idx, states, s = idx[mask], states[mask], s[mask]
    return len(idx)


def survivor_count(
    tree: Tree,
    dist: EnvDistribution,
    c: float,
    L: int,
    n: int,
    seed: int,
    population_cap: int = POPULATION_CAP,
) -> int:
    """|W intersect level n|: vertices whose ancestors past level L all keep
    S within [c k^(1/3)/10, c k^(1/3)].

    The traversal prunes dead subtrees, so only band-feasible vertices are
    ever generated; the count equals exhaustive enumeration.
    """
    if c <= 0:
        raise ConfigError("survivor band needs c > 0")
    prof = push_profile(dist)
    if tree.spec.kind == "growth-target" and abs(tree.spec.beta - prof.beta) > 1e-6:
        warnings.warn(
            f"tree growth beta {tree.spec.beta!r} != distribution beta "
            f"{prof.beta!r}; the survivor experiment assumes they match",
            stacklevel=2,
        )
    env = EnvSample(tree, dist, seed)

    def keep(d, s):
        if d <= L:
            return np.ones(len(s), dtype=bool)
        lo = c * d ** (1.0 / 3.0) / 10.0 - BAND_SLACK
        hi = c * d ** (1.0 / 3.0) + BAND_SLACK
        return (s >= lo) & (s <= hi)

    return _pruned_frontier(env, n, keep, population_cap)


def default_min_level(dist: EnvDistribution, c: float, upto: int) -> int:
    """Smallest L such that the band [c k^(1/3)/10, c k^(1/3)] is reachable
    for every k in (L, upto]; returns `upto` if no L works.

    For lattice laws this runs an exact reachable-set recursion inside the
    band; for continuous laws it uses the support interval.
    """
    if isinstance(dist, Lattice):
        from fractions import Fraction

        fr = [Fraction(v).limit_denominator(10**9) for v in dist.values]
        den = 1
        for f in fr:
            den = den * f.denominator // math.gcd(den, f.denominator)
        steps = sorted({int(f * den) for f in fr})

        def feasible(L: int) -> bool:
            reach = {0}
            for k in range(1, upto + 1):
                reach = {s + st for s in reach for st in steps}
                if len(reach) > 1_000_000:
                    raise BudgetError("reachability recursion too large")
                if k > L:
                    lo = math.ceil((c * k ** (1 / 3) / 10.0 - BAND_SLACK) * den)
                    hi = math.floor((c * k ** (1 / 3) + BAND_SLACK) * den)
                    reach = {s for s in reach if lo <= s <= hi}
                    if not reach:
                        return False
            return True

        for L in range(0, upto):
            if feasible(L):
                return L
        return upto
    lo_supp = float(np.min(dist.quantile(np.asarray([1e-12]))))
    hi_supp = float(np.max(dist.quantile(np.asarray([1.0 - 1e-12]))))
    for L in range(0, upto):
        ok = True
        for k in range(L + 1, upto + 1):
            lo = c * k ** (1 / 3) / 10.0
            hi = c * k ** (1 / 3)
            if hi < k * lo_supp or lo > k * hi_supp:
                ok = False
                break
        if ok:
            return L
    return upto


def second_moment_bound(counts) -> tuple[float, float]:
    """Paley-Zygmund lower bound mean^2 / second-moment with jackknife stderr.

    The bound applies to P(count > 0); all-zero replicates give (0, 0).
    """
    counts = np.asarray(counts, dtype=float)
    if len(counts) < 2:
        raise ConfigError("second moment bound needs >= 2 replicates")
    s1, s2 = counts.sum(), (counts**2).sum()
    if s2 == 0:
        return 0.0, 0.0
    r = len(counts)
    bound = (s1 / r) ** 2 / (s2 / r)
    loo1 = (s1 - counts) / (r - 1)
    loo2 = (s2 - counts**2) / (r - 1)
    theta = np.where(loo2 > 0, loo1**2 / np.where(loo2 > 0, loo2, 1.0), 0.0)
    se = math.sqrt((r - 1) / r * float(np.sum((theta - theta.mean()) ** 2)))
    return float(bound), se


@dataclass
class HarnackResult:
    k: int
    n: int
    m_emp: float
    m_stderr: float
    ln_sup: float
    ln_inf: float
    y_values: tuple
    ln_probs: tuple
    stderrs: tuple


def ratio_harnack(
    dist: EnvDistribution,
    c: float,
    k: int,
    n: int,
    y_grid,
    effort: int = 2000,
    master_seed: int = 0,
    method: str = "splitting",
) -> HarnackResult:
    """Empirical Harnack constant for the conditioned band probabilities.

    For each starting value y at time k, estimates the probability that the
    walk started there keeps c j^(1/3)/10 <= S_j <= c j^(1/3) for all
    j in (k, n]; returns ln(sup/inf)/k^(1/3) over the grid.  `dist` should
    be the tilted (mean-zero) law.
    """
    if k > n:
        raise ConfigError("ratio_harnack needs k <= n")
    spec = TubeSpec.cube_root(c / 10.0, c, horizon=n, start=1)
    lo_y = c * k ** (1 / 3) / 10.0 - BAND_SLACK
    hi_y = c * k ** (1 / 3) + BAND_SLACK
    lns, ses = [], []
    for i, y in enumerate(y_grid):
        if not (lo_y <= y <= hi_y):
            raise ConfigError(f"start value {y} outside the band at k={k}")
        if k == n:
            lns.append(0.0)
            ses.append(0.0)
            continue
        if method == "dp":
            if not isinstance(dist, Lattice):
                raise ConfigError("dp method needs a lattice law")
            lns.append(ln_tube_prob_exact_lattice(dist, spec, n, start_value=y,
                                                  start_k=k))
            ses.append(0.0)
        else:
            est = tube_prob_mc(
                dist, spec, n, effort, "splitting",
                rng.substream(master_seed, "harnack", k, n, i),
                start_value=float(y), start_k=k,
            )
            lns.append(est.ln_p)
            ses.append(est.stderr)
    lns_arr = np.asarray(lns)
    if np.any(np.isneginf(lns_arr)):
        raise ArithmeticError("conditioned probability estimate hit zero")
    i_sup, i_inf = int(np.argmax(lns_arr)), int(np.argmin(lns_arr))
    scale = k ** (1.0 / 3.0)
    m_emp = (lns_arr[i_sup] - lns_arr[i_inf]) / scale
    m_se = math.hypot(ses[i_sup], ses[i_inf]) / scale
    return HarnackResult(
        k=k, n=n, m_emp=float(m_emp), m_stderr=float(m_se),
        ln_sup=float(lns_arr[i_sup]), ln_inf=float(lns_arr[i_inf]),
        y_values=tuple(float(y) for y in y_grid),
        ln_probs=tuple(float(v) for v in lns),
        stderrs=tuple(float(v) for v in ses),
    )


def small_prob_event(
    tree: Tree, dist: EnvDistribution, threshold: float, n: int, seed: int,
    population_cap: int = POPULATION_CAP,
) -> bool:
    """Whether some length-n path keeps every prefix sum >= threshold."""
    env = EnvSample(tree, dist, seed)

    def keep(d, s):
        return s >= threshold

    return _pruned_frontier(env, n, keep, population_cap) > 0


@dataclass
class SmallProbRow:
    n: int
    threshold: float
    p_emp: float
    seeds: int


def small_prob_experiment(
    tree: Tree,
    dist: EnvDistribution,
    c: float,
    n_list,
    n_seeds: int,
    master_seed: int,
) -> list:
    """Empirical P(some path of length n stays above -2c(1-lam0)^{-1} n^(1/3)).

    The deliverable is the per-n trend (a decreasing sequence when the tree
    grows no faster than exp(beta n + c n^(1/3)) with c below c1); no limit
    is asserted.
    """
    prof = push_profile(dist)
    if prof.lambda0 >= 1.0:
        raise ConfigError("small-prob threshold needs lambda0 < 1")
    rows = []
    for n in n_list:
        n = int(n)
        theta = -2.0 * c / (1.0 - prof.lambda0) * n ** (1.0 / 3.0)
        hits = 0
        for j in range(n_seeds):
            seed = rng.derive_seed(master_seed, "smallprob", n, j)
            if small_prob_event(tree, dist, theta, n, seed):
                hits += 1
        rows.append(SmallProbRow(n=n, threshold=theta, p_emp=hits / n_seeds,
                                 seeds=n_seeds))
    return rows
