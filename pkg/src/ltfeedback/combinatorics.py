"""Log-space combinatorial primitives and weighted urn sampling.

Binomial coefficients are evaluated through a cached extended-precision
log-factorial table, so ratios of coefficients with arguments in the
thousands neither overflow nor lose the accuracy the degree-distribution
transforms downstream require.  The law of sequential weighted sampling
without replacement (the noncentral hypergeometric of the Wallenius kind)
is provided both as a pmf and as a sampler; the two are implemented by
independent routes so one can check the other.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import exp, expm1, log, log1p

import numpy as np
from scipy import integrate, optimize

__all__ = [
    "log_binomial",
    "hypergeom_pmf",
    "WalleniusParams",
    "wallenius_pmf",
    "weighted_sample_without_replacement",
]

# Cumulative log-factorials, kept in 80-bit precision so differences of
# nearby entries stay accurate to ~1e-13 even at n = 10^4.
_LOGFACT = np.zeros(1, dtype=np.longdouble)


def _logfact(n: int) -> np.ndarray:
    global _LOGFACT
    if n >= _LOGFACT.size:
        size = max(n + 1, 2 * _LOGFACT.size)
        table = np.empty(size, dtype=np.longdouble)
        table[0] = 0.0
        np.cumsum(np.log(np.arange(1, size, dtype=np.longdouble)), out=table[1:])
        _LOGFACT = table
    return _LOGFACT


def log_binomial(n, r):
    """Natural log of C(n, r), with -inf wherever r lies outside 0..n.

    Accepts scalars or integer arrays (broadcast together).  exp() of the
    result reproduces the exact coefficient to better than 1e-12 relative
    error for n up to 10^4.
    """
    n_arr = np.asarray(n, dtype=np.int64)
    r_arr = np.asarray(r, dtype=np.int64)
    if (n_arr < 0).any():
        raise ValueError("n must be nonnegative")
    table = _logfact(int(n_arr.max(initial=0)))
    valid = (r_arr >= 0) & (r_arr <= n_arr)
    nn = np.where(valid, n_arr, 0)
    rr = np.where(valid, r_arr, 0)
    out = np.where(valid, (table[nn] - table[rr] - table[nn - rr]).astype(np.float64), -np.inf)
    if np.isscalar(n) and np.isscalar(r):
        return float(out)
    return out


def hypergeom_pmf(x: int, population: int, successes: int, draws: int) -> float:
    """P(exactly x marked items in a uniform draw of `draws` from `population`).

    `successes` of the population are marked.  Zero outside the support.
    """
    if not 0 <= successes <= population:
        raise ValueError("need 0 <= successes <= population")
    if not 0 <= draws <= population:
        raise ValueError("need 0 <= draws <= population")
    lp = (
        log_binomial(successes, x)
        + log_binomial(population - successes, draws - x)
        - log_binomial(population, draws)
    )
    return float(np.exp(lp))


@dataclass(frozen=True)
class WalleniusParams:
    """Urn description for sequential weighted sampling without replacement.

    `group_sizes[g]` items of group g are present; every remaining item of
    group g is drawn with probability proportional to `weights[g]`.
    """

    group_sizes: tuple[int, ...]
    weights: tuple[float, ...]
    draws: int

    def __post_init__(self):
        object.__setattr__(self, "group_sizes", tuple(int(m) for m in self.group_sizes))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.group_sizes) != len(self.weights):
            raise ValueError("group_sizes and weights must have equal length")
        if len(self.group_sizes) < 2:
            raise ValueError("need at least two groups")
        if any(m < 0 for m in self.group_sizes):
            raise ValueError("group sizes must be nonnegative")
        if any(not (w > 0 and np.isfinite(w)) for w in self.weights):
            raise ValueError("weights must be strictly positive and finite")
        if self.draws < 0 or self.draws > sum(self.group_sizes):
            raise ValueError("draws must lie in 0..sum(group_sizes)")


def wallenius_pmf(counts, params: WalleniusParams) -> float:
    """Probability of observing per-group `counts` after `params.draws`
    sequential draws, each proportional to the remaining group weights.

    Evaluated from the integral form of the law: with
    D = sum_g w_g*(m_g - x_g), the probability equals
    prod_g C(m_g, x_g) * integral_0^1 prod_g (1 - t^(w_g/D))^(x_g) dt.
    The integral is computed on the substitution t = exp(-v), which turns
    the boundary layer at t=0 into a smooth bump that adaptive quadrature
    resolves to ~1e-12 absolute error.
    """
    x = tuple(int(c) for c in counts)
    if len(x) != len(params.group_sizes):
        raise ValueError("counts length must match group count")
    if any(xg < 0 or xg > mg for xg, mg in zip(x, params.group_sizes)):
        raise ValueError("counts must lie within group sizes")
    if sum(x) != params.draws:
        raise ValueError("counts must sum to draws")
    return _wallenius_cached(x, params.group_sizes, params.weights)


@lru_cache(maxsize=1_000_000)
def _wallenius_cached(x: tuple, sizes: tuple, weights: tuple) -> float:
    d_total = sum(w * (m - xg) for w, m, xg in zip(weights, sizes, x))
    if d_total == 0.0:
        # Urn exhausted: drawing everything is the only reachable outcome.
        return 1.0
    active = [(xg, w / d_total) for xg, w in zip(x, weights) if xg > 0]
    if not active:
        return 1.0
    n = sum(x)
    lc = sum(log_binomial(m, xg) for m, xg in zip(sizes, x))

    def f(v):
        s = -v
        for xg, cg in active:
            cv = cg * v
            if cv < 745.0:  # below this exp(-cv) underflows and the factor is 1
                s += xg * log1p(-exp(-cv))
        return s

    def fprime(v):
        s = -1.0
        for xg, cg in active:
            cv = cg * v
            if cv < 745.0:
                s += xg * cg / expm1(cv)
        return s

    # fprime decreases from +inf at v=0+ to -1, and is already negative at
    # v = n + 1, so the peak of exp(f) is bracketed.
    v_peak = optimize.brentq(fprime, 1e-12, n + 1.0, xtol=1e-12, rtol=1e-14)
    f_peak = f(v_peak)
    upper = v_peak + 1.0
    while f(upper) - f_peak > -60.0:
        upper *= 2.0
    integrand = lambda v: exp(f(v) - f_peak)
    value, _ = integrate.quad(
        integrand, 0.0, upper, points=[v_peak], limit=300, epsabs=1e-14, epsrel=1e-12
    )
    return exp(lc + f_peak + log(value))


def weighted_sample_without_replacement(item_weights, n: int, rng: np.random.Generator):
    """Draw n distinct indices sequentially, each proportional to the
    weights of the items still in the urn.  Returns indices in draw order.
    """
    w = np.asarray(item_weights, dtype=np.float64)
    if w.ndim != 1:
        raise ValueError("item_weights must be one-dimensional")
    if not ((w > 0) & np.isfinite(w)).all():
        raise ValueError("item weights must be strictly positive and finite")
    if n < 0 or n > w.size:
        raise ValueError("cannot draw more items than the urn holds")
    remaining = w.copy()
    chosen = np.empty(n, dtype=np.int64)
    for t in range(n):
        cum = np.cumsum(remaining)
        u = rng.random() * cum[-1]
        idx = int(np.searchsorted(cum, u, side="right"))
        while idx < w.size and remaining[idx] == 0.0:  # fp boundary guard
            idx += 1
        idx = min(idx, w.size - 1)
        chosen[t] = idx
        remaining[idx] = 0.0
    return chosen
