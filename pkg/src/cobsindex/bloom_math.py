"""Bloom filter false-positive rates, filter sizing and query-level error.

All functions are pure. Probabilities that can underflow are evaluated in
log space; binomial tails are summed with ``math.fsum``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

LN2 = math.log(2.0)

# Guards K*ell against binary round-off (0.29 * 100 == 28.999999999999996).
_THRESHOLD_EPS = 1e-9


@dataclass(frozen=True)
class BloomSpec:
    """One Bloom filter: ``w`` bits, ``k`` hash functions, ``v`` inserted terms."""

    w: int
    k: int
    v: int

    def __post_init__(self):
        if self.w < 1 or self.k < 1 or self.v < 0:
            raise ValueError(f"invalid Bloom filter spec {self}")

    @property
    def fill(self) -> float:
        return self.v / self.w

    def fpr_exact(self) -> float:
        return fpr_exact(self.w, self.k, self.v)

    def fpr_approx(self) -> float:
        return fpr_approx(self.w, self.k, self.v)


@dataclass(frozen=True)
class QuerySpec:
    """A query of ``ell`` distinct terms at coverage ``K`` against per-term rate ``p``."""

    ell: int
    K: float
    p: float

    def __post_init__(self):
        if self.ell < 1 or not 0.0 < self.K <= 1.0 or not 0.0 < self.p < 1.0:
            raise ValueError(f"invalid query spec {self}")

    def fpr(self) -> float:
        return query_fpr(self.ell, self.K, self.p)

    def chernoff(self) -> float:
        return query_fpr_chernoff(self.ell, self.K, self.p)


def _check_filter(w: int, k: int, v: int) -> None:
    if w < 1 or k < 1 or v < 0:
        raise ValueError(f"need w >= 1, k >= 1, v >= 0 (got w={w}, k={k}, v={v})")


def fpr_exact(w: int, k: int, v: int) -> float:
    """``(1 - (1 - 1/w)^(k v))^k``, the false-positive rate of a filter."""
    _check_filter(w, k, v)
    if v == 0:
        return 0.0
    if w == 1:
        return 1.0
    inner = -math.expm1(k * v * math.log1p(-1.0 / w))
    return inner**k


def fpr_approx(w: int, k: int, v: int) -> float:
    """``(1 - e^(-k v / w))^k``; an upper bound on :func:`fpr_exact`."""
    _check_filter(w, k, v)
    return (-math.expm1(-k * v / w)) ** k


def size_filter(v: int, p: float, k: int = 1) -> int:
    """Smallest ``w`` with ``fpr_approx(w, k, v) <= p``.

    Inverts the approximation to ``ceil(k v / -ln(1 - p^(1/k)))`` and then
    nudges by single bits so the floating-point result is both feasible and
    minimal. An empty document still gets a one-bit filter.
    """
    if v < 0 or k < 1:
        raise ValueError(f"need v >= 0 and k >= 1 (got v={v}, k={k})")
    if not 0.0 < p < 1.0:
        raise ValueError(f"false-positive rate must lie in (0, 1), got {p}")
    if v == 0:
        return 1
    root = p ** (1.0 / k)
    if root >= 1.0:
        raise ValueError(f"p={p} is too close to 1 for k={k}")
    w = max(1, math.ceil(k * v / -math.log1p(-root)))
    while fpr_approx(w, k, v) > p:
        w += 1
    while w > 1 and fpr_approx(w - 1, k, v) <= p:
        w -= 1
    return w


def optimal_k(w: int, v: int) -> int:
    """``max(1, round((w / v) ln 2))`` with halves rounded up."""
    if w < 1 or v < 1:
        raise ValueError(f"need w >= 1 and v >= 1 (got w={w}, v={v})")
    return max(1, math.floor(w / v * LN2 + 0.5))


def optimal_parameters(v: int, p: float) -> tuple[int, int]:
    """Classic ``(w, k)`` choice for ``v`` terms at target rate ``p``.

    ``w = ceil(-v ln p / (ln 2)^2)`` and ``k = optimal_k(w, v)``.
    """
    if v < 1:
        raise ValueError("need at least one term")
    if not 0.0 < p < 1.0:
        raise ValueError(f"false-positive rate must lie in (0, 1), got {p}")
    w = math.ceil(-v * math.log(p) / LN2**2)
    return w, optimal_k(w, v)


def coverage_threshold(ell: int, K: float) -> int:
    """Minimum score ``ceil(K * ell)`` a document needs to be reported."""
    return max(1, math.ceil(K * ell - _THRESHOLD_EPS))


def binomial_tail(n: int, m: int, p: float) -> float:
    """``P[X >= m]`` for ``X ~ Binomial(n, p)``, summed upward in log space."""
    if m <= 0:
        return 1.0
    if m > n:
        return 0.0
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return 1.0
    lp, lq = math.log(p), math.log1p(-p)
    lgn = math.lgamma(n + 1)
    terms = []
    for i in range(m, n + 1):
        log_term = lgn - math.lgamma(i + 1) - math.lgamma(n - i + 1) + i * lp + (n - i) * lq
        terms.append(math.exp(log_term))
    return min(1.0, math.fsum(terms))


def query_fpr(ell: int, K: float, p: float) -> float:
    """Probability that more than ``floor(K ell)`` of ``ell`` terms are false positives.

    ``1 - sum_{i <= floor(K ell)} C(ell, i) p^i (1-p)^(ell-i)``, evaluated as
    the upper tail so tiny results keep full relative precision.
    """
    QuerySpec(ell, K, p)
    floor_k_ell = math.floor(K * ell + _THRESHOLD_EPS)
    return binomial_tail(ell, floor_k_ell + 1, p)


def match_probability(ell: int, K: float, p: float) -> float:
    """Probability that a non-matching document reaches the reporting threshold.

    Uses the query engine's rule ``score >= ceil(K ell)``. Differs from
    :func:`query_fpr` only when ``K ell`` is an integer.
    """
    QuerySpec(ell, K, p)
    return binomial_tail(ell, coverage_threshold(ell, K), p)


def query_fpr_chernoff(ell: int, K: float, p: float) -> float:
    """Chernoff bound ``exp(-ell (K - p)^2 / (2 (1 - p)))``; requires ``K >= p``."""
    QuerySpec(ell, K, p)
    if K < p:
        raise ValueError(f"Chernoff bound needs K >= p (got K={K}, p={p})")
    return math.exp(-ell * (K - p) ** 2 / (2.0 * (1.0 - p)))
