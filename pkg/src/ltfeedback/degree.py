"""Degree distributions for rateless XOR codes and their receiver-side transforms.

The encoder draws a degree from a distribution such as the robust soliton
and XORs that many randomly chosen input symbols.  Once the receiver has
decoded part of the block, arriving symbols are stripped of known
neighbors, so the degree the decoder actually sees is a hypergeometric
mixture of the encoder's distribution.  This module builds the standard
distributions and the closed-form transforms of that stripping process:
the plain reduced distribution, its form under acknowledged symbols, the
redundancy probability, the zero-avoiding adaptive distribution, and the
two-layer / N-layer reduced distributions of weighted (unequal error
protection) codes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .combinatorics import WalleniusParams, log_binomial, wallenius_pmf

__all__ = [
    "DegreeDistribution",
    "RsdParams",
    "LayerConfig",
    "ideal_soliton",
    "robust_soliton",
    "sample_degree",
    "sample_degrees",
    "reduced_degree_dist",
    "redundancy_prob_acked",
    "reduced_degree_dist_acked",
    "adaptive_degree_dist",
    "TwoLayerReducedDist",
    "two_layer_reduced_dist",
    "n_layer_reduced_dist",
]

_SUM_TOL = 1e-9


class DegreeDistribution:
    """Probability mass over degrees 0..k for a block of k input symbols.

    Encoder-side distributions carry no mass at degree 0; receiver-side
    (reduced) forms may.  The pmf is immutable once constructed.
    """

    __slots__ = ("k", "pmf", "_cdf", "_token")

    def __init__(self, k: int, pmf):
        if k < 1:
            raise ValueError("block length k must be >= 1")
        arr = np.array(pmf, dtype=np.float64)
        if arr.shape != (k + 1,):
            raise ValueError(f"pmf must have length k+1 = {k + 1}")
        if (arr < 0).any():
            raise ValueError("pmf entries must be nonnegative")
        total = arr.sum()
        if abs(total - 1.0) > _SUM_TOL:
            raise ValueError(f"pmf sums to {total!r}, not 1")
        arr.flags.writeable = False
        self.k = k
        self.pmf = arr
        self._cdf = None
        self._token = None

    @property
    def cdf(self) -> np.ndarray:
        if self._cdf is None:
            c = np.cumsum(self.pmf)
            c.flags.writeable = False
            self._cdf = c
        return self._cdf

    def token(self):
        """Hashable identity of (k, pmf), usable as a cache key."""
        if self._token is None:
            self._token = (self.k, hash(self.pmf.tobytes()))
        return self._token

    def __repr__(self):
        return f"DegreeDistribution(k={self.k})"


@dataclass(frozen=True)
class RsdParams:
    """Robust soliton parameters.  The spike scale S = c*ln(k/delta)*sqrt(k)
    must not exceed k; S = 0 (e.g. delta = 1 at k = 1) degenerates to the
    ideal soliton."""

    k: int
    c: float
    delta: float

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not self.c > 0:
            raise ValueError("c must be positive")
        if not 0 < self.delta <= 1:
            raise ValueError("delta must lie in (0, 1]")
        if self.spike_scale > self.k:
            raise ValueError("spike scale c*ln(k/delta)*sqrt(k) exceeds k")

    @property
    def spike_scale(self) -> float:
        return self.c * math.log(self.k / self.delta) * math.sqrt(self.k)


def ideal_soliton(k: int) -> DegreeDistribution:
    """1/k at degree 1, 1/(i(i-1)) above.  Test fixture and soliton building
    block; too fragile to drive a real encoder."""
    pmf = np.zeros(k + 1)
    pmf[1] = 1.0 / k
    i = np.arange(2, k + 1)
    pmf[2:] = 1.0 / (i * (i - 1))
    return DegreeDistribution(k, pmf)


@lru_cache(maxsize=4096)
def robust_soliton(params: RsdParams) -> DegreeDistribution:
    """Ideal soliton plus the low-degree boost and spike, renormalized.

    The boost adds S/(i*k) below the spike index ceil(k/S) and
    S*ln(S/delta)/k at it; a spike index beyond k simply falls outside the
    support.  Results are cached; the returned object is shared.
    """
    k, delta = params.k, params.delta
    s = params.spike_scale
    raw = ideal_soliton(k).pmf.copy()
    if s > 0:
        spike = math.ceil(k / s)
        i = np.arange(1, min(spike, k + 1))
        raw[i] += s / (i * k)
        if spike <= k:
            raw[spike] += s * math.log(s / delta) / k
    return DegreeDistribution(k, raw / raw.sum())


def sample_degree(dist: DegreeDistribution, rng: np.random.Generator) -> int:
    """One inverse-CDF draw from the distribution's cached cumulative table."""
    idx = int(np.searchsorted(dist.cdf, rng.random(), side="right"))
    return min(idx, dist.k)


def sample_degrees(dist: DegreeDistribution, rng: np.random.Generator, size: int) -> np.ndarray:
    """Vectorized counterpart of sample_degree."""
    idx = np.searchsorted(dist.cdf, rng.random(size), side="right")
    return np.minimum(idx, dist.k)


def _log_pmf(pmf: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.where(pmf > 0, np.log(np.where(pmf > 0, pmf, 1.0)), -np.inf)


def _strip_mixture(pmf: np.ndarray, eligible: int, undecoded: int) -> np.ndarray:
    """Distribution of the number of undecoded neighbors when a symbol's
    degree is drawn from `pmf` and its neighbors are chosen uniformly among
    `eligible` symbols of which `undecoded` are not yet decoded.

    Entry [d] for 0 <= d <= undecoded is
        sum_i pmf[i] * C(undecoded, d) * C(eligible-undecoded, i-d) / C(eligible, i).
    Mass of `pmf` above `eligible` is treated as a draw of the full eligible
    set (the encoder clamps oversized degrees), contributing to d = undecoded.
    """
    i = np.arange(eligible + 1)
    d = np.arange(undecoded + 1)
    log_terms = (
        _log_pmf(pmf[: eligible + 1])[None, :]
        + log_binomial(undecoded, d)[:, None]
        + log_binomial(eligible - undecoded, i[None, :] - d[:, None])
        - log_binomial(eligible, i)[None, :]
    )
    out = np.exp(log_terms).sum(axis=1)
    tail = pmf[eligible + 1 :].sum()
    if tail > 0:
        out[undecoded] += tail
    return out


def reduced_degree_dist(original: DegreeDistribution, undecoded: int) -> DegreeDistribution:
    """Distribution of the degree left after stripping decoded neighbors.

    `undecoded` of the k input symbols remain unknown at the receiver.  The
    result is indexed 0..k with zero mass above `undecoded`; index 0 is the
    probability an arriving symbol is entirely redundant.
    """
    k = original.k
    if not 0 <= undecoded <= k:
        raise ValueError("undecoded count must lie in 0..k")
    out = np.zeros(k + 1)
    out[: undecoded + 1] = _strip_mixture(original.pmf, k, undecoded)
    return DegreeDistribution(k, out)


def redundancy_prob_acked(original: DegreeDistribution, undecoded: int, acked: int) -> float:
    """Probability an arriving symbol is entirely redundant when the encoder
    excludes `acked` acknowledged symbols and `undecoded` remain unknown.

    Equals sum_i pmf[i] * C(k-acked-undecoded, i) / C(k-acked, i); strictly
    decreasing in `acked` for undecoded >= 1.
    """
    k = original.k
    if not 0 <= undecoded <= k:
        raise ValueError("undecoded count must lie in 0..k")
    if not 0 <= acked <= k - undecoded:
        raise ValueError("acked count must lie in 0..k-undecoded")
    if undecoded == 0:
        return 1.0
    decoded_unacked = k - acked - undecoded
    i = np.arange(decoded_unacked + 1)
    log_terms = (
        _log_pmf(original.pmf[: decoded_unacked + 1])
        + log_binomial(decoded_unacked, i)
        - log_binomial(k - acked, i)
    )
    return float(np.exp(log_terms).sum())


def reduced_degree_dist_acked(
    original: DegreeDistribution, undecoded: int, acked: int
) -> DegreeDistribution:
    """Reduced distribution when the encoder works over k-acked eligible
    symbols of which `undecoded` are still unknown at the receiver.

    Degrees drawn above the eligible count are clamped to it (the whole
    eligible set is used), so the transform matches the operational encoder
    even when `original` has mass beyond k-acked.  With acked = k-undecoded
    and `original` supported on the eligible set, the output equals
    `original`: full acknowledgment freezes the stripping shift entirely.
    """
    k = original.k
    if not 0 <= undecoded <= k:
        raise ValueError("undecoded count must lie in 0..k")
    if not 0 <= acked <= k - undecoded:
        raise ValueError("acked count must lie in 0..k-undecoded")
    eligible = k - acked
    out = np.zeros(k + 1)
    out[: undecoded + 1] = _strip_mixture(original.pmf, eligible, undecoded)
    return DegreeDistribution(k, out)


def adaptive_degree_dist(original: DegreeDistribution, undecoded: int) -> DegreeDistribution:
    """Encoder distribution over the `undecoded` remaining symbols that
    reproduces the receiver-side degree shift while never emitting a
    redundant symbol.

    Assumes every decoded symbol has been acknowledged, so the encoder can
    target the remaining block directly:
        rho(d) = sum_j pmf[j] * C(L, d) * C(k-L, j-d) / ((1 - p0) * C(k, j))
    for 1 <= d <= L, where p0 is the redundancy probability of the plain
    reduced distribution.  The result is a distribution over a block of
    size L = `undecoded`.
    """
    k = original.k
    if not 1 <= undecoded <= k:
        raise ValueError("undecoded count must lie in 1..k")
    j = np.arange(k + 1)
    d = np.arange(1, undecoded + 1)
    log_terms = (
        _log_pmf(original.pmf)[None, :]
        + log_binomial(undecoded, d)[:, None]
        + log_binomial(k - undecoded, j[None, :] - d[:, None])
        - log_binomial(k, j)[None, :]
    )
    unnorm = np.exp(log_terms).sum(axis=1)
    p0_terms = (
        _log_pmf(original.pmf) + log_binomial(k - undecoded, j) - log_binomial(k, j)
    )
    p0 = np.exp(p0_terms).sum()
    pmf = np.zeros(undecoded + 1)
    pmf[1:] = unnorm / (1.0 - p0)
    return DegreeDistribution(undecoded, pmf)


@dataclass(frozen=True)
class LayerConfig:
    """Contiguous partition of the block into priority layers.

    `layer_sizes` gives the symbol count per layer, most important first;
    `weight_ratios` gives the relative per-symbol selection weight of each
    layer (any positive scale).
    """

    layer_sizes: tuple[int, ...]
    weight_ratios: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "layer_sizes", tuple(int(m) for m in self.layer_sizes))
        object.__setattr__(self, "weight_ratios", tuple(float(w) for w in self.weight_ratios))
        if len(self.layer_sizes) != len(self.weight_ratios):
            raise ValueError("layer_sizes and weight_ratios must have equal length")
        if len(self.layer_sizes) < 2:
            raise ValueError("need at least two layers")
        if any(m < 1 for m in self.layer_sizes):
            raise ValueError("layer sizes must be positive")
        if any(not (w > 0 and np.isfinite(w)) for w in self.weight_ratios):
            raise ValueError("weight ratios must be strictly positive and finite")

    @property
    def k(self) -> int:
        return sum(self.layer_sizes)

    @property
    def n_layers(self) -> int:
        return len(self.layer_sizes)

    def boundaries(self) -> tuple[int, ...]:
        """Start offsets of each layer plus the final end offset."""
        out = [0]
        for m in self.layer_sizes:
            out.append(out[-1] + m)
        return tuple(out)

    def selection_probs(self) -> tuple[float, ...]:
        """Per-symbol selection probability of each layer; these satisfy
        sum_j p_j * layer_sizes[j] = 1."""
        total = sum(w * m for w, m in zip(self.weight_ratios, self.layer_sizes))
        return tuple(w / total for w in self.weight_ratios)


@dataclass(frozen=True)
class TwoLayerReducedDist:
    """Joint pmf of (undecoded base neighbors, undecoded refinement
    neighbors) after stripping, for a two-layer weighted code."""

    pmf: np.ndarray  # shape (undecoded_base+1, undecoded_refine+1)
    undecoded_base: int
    undecoded_refine: int

    def __post_init__(self):
        total = self.pmf.sum()
        if abs(total - 1.0) > 1e-8:
            raise ValueError(f"joint pmf sums to {total!r}, not 1")
        if (self.pmf < 0).any():
            raise ValueError("joint pmf entries must be nonnegative")

    def marginal_total(self) -> np.ndarray:
        """pmf of the total reduced degree (base + refinement neighbors)."""
        lb, lr = self.undecoded_base, self.undecoded_refine
        out = np.zeros(lb + lr + 1)
        for ib in range(lb + 1):
            out[ib : ib + lr + 1] += self.pmf[ib]
        return out


def _split_table(marked: int, group_size: int) -> np.ndarray:
    """H[d, j] = P(d of j uniformly chosen group members are marked)."""
    d = np.arange(marked + 1)
    j = np.arange(group_size + 1)
    log_h = (
        log_binomial(marked, d)[:, None]
        + log_binomial(group_size - marked, j[None, :] - d[:, None])
        - log_binomial(group_size, j)[None, :]
    )
    return np.exp(log_h)


def two_layer_reduced_dist(
    original: DegreeDistribution,
    layers: LayerConfig,
    undecoded_base: int,
    undecoded_refine: int,
) -> TwoLayerReducedDist:
    """Joint reduced-degree distribution of a two-layer weighted code.

    The split of a degree-i symbol across layers follows the sequential
    weighted-sampling law (wallenius_pmf); within each layer the split
    between decoded and undecoded neighbors is uniform, hence
    hypergeometric.  Summing over the degree and the layer split yields the
    joint pmf over (base, refinement) reduced degrees.
    """
    if layers.n_layers != 2:
        raise ValueError("two_layer_reduced_dist requires exactly two layers")
    k = layers.k
    if original.k != k:
        raise ValueError("distribution block length must match layer config")
    m_base, m_refine = layers.layer_sizes
    if not 0 <= undecoded_base <= m_base:
        raise ValueError("undecoded_base must lie in 0..base layer size")
    if not 0 <= undecoded_refine <= m_refine:
        raise ValueError("undecoded_refine must lie in 0..refinement layer size")
    w_base, w_refine = layers.weight_ratios
    weights = (w_base / w_refine, 1.0)
    h_base = _split_table(undecoded_base, m_base)
    h_refine = _split_table(undecoded_refine, m_refine)
    out = np.zeros((undecoded_base + 1, undecoded_refine + 1))
    for i in range(k + 1):
        p_i = original.pmf[i]
        if p_i == 0.0:
            continue
        j_lo = max(0, i - m_refine)
        j_hi = min(i, m_base)
        js = np.arange(j_lo, j_hi + 1)
        params = WalleniusParams((m_base, m_refine), weights, i)
        phi = np.array([wallenius_pmf((j, i - j), params) for j in js])
        out += p_i * (h_base[:, js] * phi) @ h_refine[:, i - js].T
    return TwoLayerReducedDist(out, undecoded_base, undecoded_refine)


def _compositions(total: int, caps: tuple[int, ...]):
    """All nonnegative integer vectors below `caps` summing to `total`."""
    if len(caps) == 1:
        if 0 <= total <= caps[0]:
            yield (total,)
        return
    head_max = min(caps[0], total)
    for h in range(head_max + 1):
        for rest in _compositions(total - h, caps[1:]):
            yield (h,) + rest


def n_layer_reduced_dist(
    original: DegreeDistribution, layers: LayerConfig, undecoded
) -> np.ndarray:
    """Joint reduced-degree pmf of an N-layer weighted code.

    `undecoded[n]` symbols of layer n remain unknown.  Returns an array of
    shape (undecoded[0]+1, ..., undecoded[N-1]+1); entry [d] is the
    probability an arriving symbol has d[n] undecoded neighbors in layer n.
    The layer split of a degree-i symbol follows the multivariate
    sequential weighted-sampling law; the within-layer splits are uniform.
    """
    sizes = layers.layer_sizes
    und = tuple(int(u) for u in undecoded)
    if len(und) != layers.n_layers:
        raise ValueError("undecoded vector length must match layer count")
    if any(u < 0 or u > m for u, m in zip(und, sizes)):
        raise ValueError("undecoded counts must lie within layer sizes")
    k = layers.k
    if original.k != k:
        raise ValueError("distribution block length must match layer config")
    tables = [_split_table(u, m) for u, m in zip(und, sizes)]
    out = np.zeros(tuple(u + 1 for u in und))
    for i in range(k + 1):
        p_i = original.pmf[i]
        if p_i == 0.0:
            continue
        params = WalleniusParams(sizes, layers.weight_ratios, i)
        for j in _compositions(i, sizes):
            phi = wallenius_pmf(j, params)
            if phi == 0.0:
                continue
            block = tables[0][:, j[0]]
            for table, jn in zip(tables[1:], j[1:]):
                block = np.multiply.outer(block, table[:, jn])
            out += (p_i * phi) * block
    return out
