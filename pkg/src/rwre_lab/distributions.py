"""Increment distributions, the backward push, and exponential tilting.

The environment attaches an i.i.d. copy of a real random variable X to
every vertex.  Everything downstream is controlled by the minimum of the
moment generating function M(lam) = E exp(lam*X) over lam in [0, 1]:

    backward_push = -ln min M,    minimizer lam0,

and, when lam0 is interior ("top-heavy" law), by the exponentially
tilted law  dmu'/dmu (x) = exp(lam0*x) / M(lam0),  which has mean zero.
Three families are supported: finite lattices (exact sums), gaussians
(closed forms), and tabulated densities on a uniform grid (trapezoid
quadrature, with an attached error estimate).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .errors import ConfigError

MASS_TOL = 1e-12
ENDPOINT_TOL = 1e-8
TERNARY_TOL = 1e-10


class EnvDistribution:
    """Base class for increment laws. Subclasses are immutable value objects."""

    kind = "abstract"

    def mgf(self, lam: float) -> float:
        raise NotImplementedError

    def mgf_dlam(self, lam: float) -> float:
        """E[X exp(lam X)], the derivative of the MGF in lam."""
        raise NotImplementedError

    def mgf_d2lam(self, lam: float) -> float:
        """E[X^2 exp(lam X)]."""
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def variance(self) -> float:
        raise NotImplementedError

    def quantile(self, u):
        """Inverse CDF, vectorized; the pure map from uniforms to samples."""
        raise NotImplementedError

    def sample(self, stream: np.random.Generator, size=None):
        raise NotImplementedError

    def quadrature_error(self, lam: float = 0.0) -> float:
        """Estimated numerical-integration error of derived quantities (0 if exact)."""
        return 0.0

    @property
    def is_lattice(self) -> bool:
        return isinstance(self, Lattice)


@dataclass(frozen=True)
class Lattice(EnvDistribution):
    """Finite atomic law: values strictly increasing, probabilities summing to 1."""

    values: tuple
    probs: tuple

    kind = "lattice"

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        ps = tuple(float(p) for p in self.probs)
        if len(vals) == 0 or len(vals) != len(ps):
            raise ConfigError("lattice needs matching, nonempty values/probs")
        if any(p < 0 for p in ps):
            raise ConfigError("lattice probabilities must be nonnegative")
        if abs(sum(ps) - 1.0) > MASS_TOL:
            raise ConfigError(f"lattice mass {sum(ps)!r} not within {MASS_TOL} of 1")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ConfigError("lattice values must be strictly increasing")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "probs", ps)

    @property
    def _v(self):
        return np.asarray(self.values)

    @property
    def _p(self):
        return np.asarray(self.probs)

    @property
    def _cum(self):
        return np.cumsum(self._p)

    def mgf(self, lam):
        return float(np.dot(self._p, np.exp(lam * self._v)))

    def mgf_dlam(self, lam):
        return float(np.dot(self._p * self._v, np.exp(lam * self._v)))

    def mgf_d2lam(self, lam):
        return float(np.dot(self._p * self._v**2, np.exp(lam * self._v)))

    def mean(self):
        return float(np.dot(self._p, self._v))

    def variance(self):
        m = self.mean()
        return float(np.dot(self._p, (self._v - m) ** 2))

    def quantile(self, u):
        idx = np.searchsorted(self._cum, np.asarray(u), side="right")
        idx = np.minimum(idx, len(self.values) - 1)
        return self._v[idx]

    def quantile_index(self, u):
        """Atom index instead of value; lets callers store 1-byte codes."""
        idx = np.searchsorted(self._cum, np.asarray(u), side="right")
        return np.minimum(idx, len(self.values) - 1)

    def sample(self, stream, size=None):
        u = stream.random(size)
        out = self.quantile(u)
        return float(out) if size is None else out


def pm_one(p: float) -> Lattice:
    """The +/-1 law with P(X = +1) = p."""
    return Lattice(values=(-1.0, 1.0), probs=(1.0 - p, p))


@dataclass(frozen=True)
class Gaussian(EnvDistribution):
    """Normal law N(mean, var); all MGF quantities in closed form."""

    mean_: float
    var: float

    kind = "gaussian"

    def __post_init__(self):
        if not (self.var > 0):
            raise ConfigError("gaussian variance must be positive")

    def mgf(self, lam):
        return math.exp(lam * self.mean_ + 0.5 * lam * lam * self.var)

    def mgf_dlam(self, lam):
        return (self.mean_ + lam * self.var) * self.mgf(lam)

    def mgf_d2lam(self, lam):
        m1 = self.mean_ + lam * self.var
        return (m1 * m1 + self.var) * self.mgf(lam)

    def mean(self):
        return self.mean_

    def variance(self):
        return self.var

    def quantile(self, u):
        return self.mean_ + math.sqrt(self.var) * ndtri(np.asarray(u))

    def sample(self, stream, size=None):
        return self.mean_ + math.sqrt(self.var) * stream.standard_normal(size)


class Tabulated(EnvDistribution):
    """Density tabulated on a uniform grid; moments by trapezoid quadrature.

    The constructor validates unit mass to MASS_TOL; `from_samples`
    rescales an unnormalized table first.  Quadrature error estimates come
    from comparing against the half-resolution grid (Richardson).
    """

    kind = "tabulated"

    def __init__(self, xs, density):
        xs = np.asarray(xs, dtype=float)
        density = np.asarray(density, dtype=float)
        if xs.ndim != 1 or xs.shape != density.shape or len(xs) < 3:
            raise ConfigError("tabulated needs matching 1-D grids, >= 3 points")
        steps = np.diff(xs)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
            raise ConfigError("tabulated grid must be uniform")
        if np.any(density < 0):
            raise ConfigError("tabulated density must be nonnegative")
        self.xs = xs
        self.density = density
        self.step = float(steps[0])
        w = np.full(len(xs), self.step)
        w[0] = w[-1] = 0.5 * self.step
        self._w = w
        mass = float(np.dot(w, density))
        if abs(mass - 1.0) > MASS_TOL:
            raise ConfigError(f"tabulated mass {mass!r} not within {MASS_TOL} of 1")
        cdf = np.concatenate(
            [[0.0], np.cumsum(0.5 * self.step * (density[1:] + density[:-1]))]
        )
        self._cdf = np.minimum(cdf / cdf[-1], 1.0)

    @classmethod
    def from_samples(cls, xs, density):
        xs = np.asarray(xs, dtype=float)
        density = np.asarray(density, dtype=float)
        step = xs[1] - xs[0]
        w = np.full(len(xs), step)
        w[0] = w[-1] = 0.5 * step
        mass = float(np.dot(w, density))
        if mass <= 0:
            raise ConfigError("tabulated density has no mass")
        return cls(xs, density / mass)

    def _quad(self, integrand):
        return float(np.dot(self._w, integrand))

    def _quad_error(self, integrand):
        # Richardson: |I_h - I_2h| / 3 estimates the O(h^2) trapezoid error.
        xs2 = self.xs[::2]
        if len(xs2) < 3:
            return 0.0
        f2 = integrand[::2]
        h2 = xs2[1] - xs2[0]
        w2 = np.full(len(xs2), h2)
        w2[0] = w2[-1] = 0.5 * h2
        coarse = float(np.dot(w2, f2))
        return abs(self._quad(integrand) - coarse) / 3.0

    def mgf(self, lam):
        with np.errstate(over="ignore"):
            vals = self.density * np.exp(lam * self.xs)
        out = self._quad(vals)
        return math.inf if not np.isfinite(out) else out

    def mgf_dlam(self, lam):
        return self._quad(self.density * self.xs * np.exp(lam * self.xs))

    def mgf_d2lam(self, lam):
        return self._quad(self.density * self.xs**2 * np.exp(lam * self.xs))

    def quadrature_error(self, lam: float = 0.0):
        return self._quad_error(self.density * np.exp(lam * self.xs))

    def mean(self):
        return self._quad(self.density * self.xs)

    def variance(self):
        m = self.mean()
        return self._quad(self.density * (self.xs - m) ** 2)

    def quantile(self, u):
        return np.interp(np.asarray(u), self._cdf, self.xs)

    def sample(self, stream, size=None):
        out = self.quantile(stream.random(size))
        return float(out) if size is None else out


@dataclass(frozen=True)
class PushProfile:
    """Derived MGF-minimum quantities for one increment law.

    beta is -ln(mgf_min), evaluated with the same arithmetic as mgf_min.
    tilted_variance is the variance of the law reweighted by
    exp(lambda0 * x) / mgf_min (well defined at endpoint minimizers too).
    """

    beta: float
    lambda0: float
    top_heavy: bool
    tilted_variance: float
    mgf_min: float
    degenerate: bool = False
    quad_error: float = 0.0


def mgf(dist: EnvDistribution, lam: float) -> float:
    """E exp(lam X); returns math.inf on overflow/divergence."""
    out = dist.mgf(lam)
    return math.inf if not np.isfinite(out) else float(out)


def _ternary_argmin(f, lo: float, hi: float, tol: float) -> float:
    """Ternary search for the minimizer of a convex f on [lo, hi]."""
    for _ in range(200):
        if hi - lo <= tol:
            break
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if f(m1) <= f(m2):
            hi = m2
        else:
            lo = m1
    return 0.5 * (lo + hi)


def _polish_interior_minimizer(dist: EnvDistribution, lam: float) -> float:
    """Newton iteration on M'(lam) = 0 with a bisection safeguard.

    Ternary search alone resolves the minimizer only to ~sqrt(eps) because
    the objective is flat at the bottom; the derivative has a simple,
    well-conditioned zero, so a few Newton steps reach machine precision.
    """
    lo, hi = 0.0, 1.0
    for _ in range(100):
        d1 = dist.mgf_dlam(lam)
        if d1 > 0:
            hi = lam
        elif d1 < 0:
            lo = lam
        else:
            return lam
        d2 = dist.mgf_d2lam(lam)
        step = d1 / d2 if d2 > 0 else 0.0
        nxt = lam - step
        if not (lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        if abs(nxt - lam) < 1e-16:
            return nxt
        lam = nxt
    return lam


def push_profile(dist: EnvDistribution) -> PushProfile:
    """Minimize the MGF over [0, 1] and package the derived quantities.

    Raises ValueError if the MGF is not finite on [0, 1 + delta]; the whole
    pipeline requires a finite exponential moment slightly past 1.
    """
    for probe in (0.0, 0.25, 0.5, 0.75, 1.0, 1.05):
        if not np.isfinite(dist.mgf(probe)):
            raise ValueError(f"MGF diverges at lambda={probe}; law unsupported")

    degenerate = isinstance(dist, Lattice) and len(dist.values) == 1
    if degenerate:
        x0 = dist.values[0]
        if x0 == 0.0:
            lam0 = 0.0
        elif x0 > 0.0:
            lam0 = 0.0
        else:
            lam0 = 1.0
    else:
        lam0 = _ternary_argmin(dist.mgf, 0.0, 1.0, TERNARY_TOL)
        # Classify endpoint vs interior by the derivative sign, then polish.
        if dist.mgf_dlam(0.0) >= 0.0:
            lam0 = 0.0
        elif dist.mgf_dlam(1.0) <= 0.0:
            lam0 = 1.0
        else:
            lam0 = _polish_interior_minimizer(dist, lam0)

    mgf_min = dist.mgf(lam0)
    beta = -math.log(mgf_min)
    top_heavy = (
        not degenerate
        and ENDPOINT_TOL < lam0 < 1.0 - ENDPOINT_TOL
        and np.isfinite(dist.mgf(lam0 + 0.05))
    )
    m1 = dist.mgf_dlam(lam0) / mgf_min
    m2 = dist.mgf_d2lam(lam0) / mgf_min
    tilted_var = max(m2 - m1 * m1, 0.0)
    return PushProfile(
        beta=beta,
        lambda0=lam0,
        top_heavy=top_heavy,
        tilted_variance=tilted_var,
        mgf_min=mgf_min,
        degenerate=degenerate,
        quad_error=dist.quadrature_error(lam0),
    )


def tilt(dist: EnvDistribution) -> EnvDistribution:
    """The mean-zero reweighted law dmu'/dmu = exp(lambda0 x)/mgf_min.

    Only defined for top-heavy laws (interior minimizer); an endpoint
    minimizer raises ValueError.
    """
    prof = push_profile(dist)
    if not prof.top_heavy:
        raise ValueError(
            f"tilting undefined: minimizer lambda0={prof.lambda0} is at a boundary"
        )
    lam0, m = prof.lambda0, prof.mgf_min
    if isinstance(dist, Lattice):
        w = np.asarray(dist.probs) * np.exp(lam0 * np.asarray(dist.values)) / m
        return Lattice(values=dist.values, probs=tuple(float(x) for x in w))
    if isinstance(dist, Gaussian):
        return Gaussian(mean_=dist.mean_ + lam0 * dist.var, var=dist.var)
    if isinstance(dist, Tabulated):
        dens = dist.density * np.exp(lam0 * dist.xs) / m
        return Tabulated(dist.xs, dens)
    raise TypeError(f"cannot tilt {type(dist).__name__}")


def sample(dist: EnvDistribution, stream: np.random.Generator, size=None):
    """Draw one variate (or `size` of them) from an explicit stream."""
    return dist.sample(stream, size)


def gaussian_push_closed_form(mean: float, var: float):
    """Reference (beta, lambda0) for N(mean, var), for cross-checking."""
    lam0 = min(1.0, max(0.0, -mean / var))
    beta = -(lam0 * mean + 0.5 * lam0 * lam0 * var)
    return beta, lam0


def pm_one_push_closed_form(p: float):
    """Reference (beta, lambda0) for the +/-1(p) law with p < 1/2."""
    lam0 = 0.5 * math.log((1.0 - p) / p)
    if lam0 >= 1.0:
        lam0 = 1.0
        beta = -math.log(p * math.e + (1.0 - p) / math.e)
    else:
        beta = -math.log(2.0 * math.sqrt(p * (1.0 - p)))
    return beta, lam0


def parse_distribution(block: dict) -> EnvDistribution:
    """Build a distribution from a key=value config block.

    Recognized forms:
      kind=lattice   atoms=-1:0.7,1:0.3
      kind=gaussian  mean=-1  var=2
      kind=tabulated x0=-6 step=0.01 density=d0,d1,...   (rescaled to mass 1)
    """
    try:
        kind = block["kind"].strip()
    except KeyError:
        raise ConfigError("distribution block missing field 'kind'") from None
    if kind == "lattice":
        if "atoms" not in block:
            raise ConfigError("lattice distribution missing field 'atoms'")
        pairs = []
        for item in block["atoms"].split(","):
            v, _, p = item.partition(":")
            try:
                pairs.append((float(v), float(p)))
            except ValueError:
                raise ConfigError(f"bad lattice atom {item!r}") from None
        pairs.sort()
        return Lattice(
            values=tuple(v for v, _ in pairs), probs=tuple(p for _, p in pairs)
        )
    if kind == "gaussian":
        for fieldname in ("mean", "var"):
            if fieldname not in block:
                raise ConfigError(f"gaussian distribution missing field {fieldname!r}")
        return Gaussian(mean_=float(block["mean"]), var=float(block["var"]))
    if kind in ("tabulated", "tabulated-density"):
        for fieldname in ("x0", "step", "density"):
            if fieldname not in block:
                raise ConfigError(f"tabulated distribution missing field {fieldname!r}")
        dens = np.array([float(d) for d in block["density"].split(",")])
        x0, step = float(block["x0"]), float(block["step"])
        xs = x0 + step * np.arange(len(dens))
        return Tabulated.from_samples(xs, dens)
    raise ConfigError(f"unknown distribution kind {kind!r}")
