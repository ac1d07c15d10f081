"""Anderson-Darling, Spearman and Wilcoxon signed-rank tests.

All tests are deterministic; none use resampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence

import numpy as np
from scipy import stats as sps


class StatisticsError(ValueError):
    """The test cannot be computed on this sample."""


@dataclass(frozen=True)
class TestResult:
    test: str
    statistic: float
    p_value: float
    alpha: float
    rejected: bool
    n: int
    critical_value: float | None = None


# Stephens (1974) case 3: mean and variance estimated; applies to A2 * (1 + 0.75/n + 2.25/n^2)
AD_CRITICAL_VALUES = {0.15: 0.576, 0.10: 0.656, 0.05: 0.752, 0.025: 0.873, 0.01: 1.035}
AD_MIN_N = 8


def anderson_darling_statistic(sample: Sequence[float]) -> float:
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    sd = x.std(ddof=1)
    if not sd > 0:
        raise StatisticsError("zero variance sample")
    z = (x - x.mean()) / sd
    logcdf = sps.norm.logcdf(z)
    logsf = sps.norm.logsf(z)
    i = np.arange(1, n + 1)
    return float(-n - np.sum((2 * i - 1) * (logcdf + logsf[::-1])) / n)


def _ad_pvalue(a2star: float) -> float:
    # D'Agostino & Stephens (1986) piecewise approximation for case 3
    if a2star < 0.2:
        p = 1 - math.exp(-13.436 + 101.14 * a2star - 223.73 * a2star**2)
    elif a2star < 0.34:
        p = 1 - math.exp(-8.318 + 42.796 * a2star - 59.938 * a2star**2)
    elif a2star < 0.6:
        p = math.exp(0.9177 - 4.279 * a2star - 1.38 * a2star**2)
    elif a2star <= 13:
        p = math.exp(1.2937 - 5.709 * a2star + 0.0186 * a2star**2)
    else:
        p = 0.0
    return min(max(p, 0.0), 1.0)


def anderson_darling_normal(sample: Sequence[float], alpha: float = 0.05) -> TestResult:
    """Normality test with estimated mean and variance.

    The decision compares the adjusted statistic with the tabulated critical
    value for ``alpha``; ``p_value`` is an approximation reported for
    information only. For an ``alpha`` outside the table the decision falls
    back to the approximate p-value.
    """
    x = np.asarray(sample, dtype=float)
    n = x.size
    if n < AD_MIN_N:
        raise StatisticsError(f"Anderson-Darling needs n >= {AD_MIN_N}, got {n}")
    if not np.all(np.isfinite(x)):
        raise StatisticsError("non-finite values in sample")
    a2 = anderson_darling_statistic(x)
    a2star = a2 * (1 + 0.75 / n + 2.25 / n**2)
    p = _ad_pvalue(a2star)
    crit = AD_CRITICAL_VALUES.get(round(alpha, 6))
    rejected = a2star > crit if crit is not None else p < alpha
    return TestResult("anderson_darling", a2star, p, alpha, bool(rejected), n, crit)


# -- Spearman --------------------------------------------------------------


@dataclass(frozen=True)
class SpearmanResult:
    rho: float
    p_value: float
    alpha: float
    rejected: bool
    n: int


def spearman_rho(x: Sequence[float], y: Sequence[float], alpha: float = 0.01) -> SpearmanResult:
    """Pearson correlation of average ranks; two-sided p from Student's t with ``n - 2`` df."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise StatisticsError(f"length mismatch: {x.shape} vs {y.shape}")
    n = x.size
    if n < 4:
        raise StatisticsError(f"Spearman needs n >= 4, got {n}")
    rx = sps.rankdata(x) - (n + 1) / 2
    ry = sps.rankdata(y) - (n + 1) / 2
    sxx, syy = rx @ rx, ry @ ry
    if sxx == 0 or syy == 0:
        raise StatisticsError("zero rank variance")
    rho = float(np.clip(rx @ ry / math.sqrt(sxx * syy), -1.0, 1.0))
    if abs(rho) == 1.0:
        p = 0.0
    else:
        t = rho * math.sqrt((n - 2) / (1 - rho * rho))
        p = float(min(1.0, 2 * sps.t.sf(abs(t), n - 2)))
    return SpearmanResult(rho, p, alpha, p < alpha, n)


BANDS = ("none", "weak", "moderate", "strong", "perfect")


def rho_band(rho: float) -> str:
    """Qualitative strength of a correlation coefficient.

    ``|rho|`` is rounded half-up to two decimals, then: 0 none, up to 0.39 weak,
    0.40-0.69 moderate, 0.70-0.99 strong; only an exact 1 is perfect.
    """
    if math.isnan(rho) or abs(rho) > 1:
        raise ValueError(f"correlation out of range: {rho}")
    a = abs(rho)
    if a == 0:
        return "none"
    if a == 1:
        return "perfect"
    r = Decimal(repr(a)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
    if r <= Decimal("0.39"):
        return "weak"
    if r <= Decimal("0.69"):
        return "moderate"
    return "strong"


# -- Wilcoxon signed-rank ---------------------------------------------------

WILCOXON_MIN_N = 5
EXACT_MAX_N = 12


def _exact_null_counts(n: int) -> list[int]:
    """Number of sign assignments of ranks 1..n giving each positive-rank sum."""
    counts = [1] + [0] * (n * (n + 1) // 2)
    for r in range(1, n + 1):
        for s in range(len(counts) - 1, r - 1, -1):
            counts[s] += counts[s - r]
    return counts


def wilcoxon_exact_p(statistic: float, n: int) -> float:
    """Two-sided exact p for ``W = min(W+, W-)`` with untied integer ranks."""
    counts = _exact_null_counts(n)
    tail = sum(counts[: int(math.floor(statistic)) + 1])
    return min(1.0, 2 * tail / 2**n)


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float], alpha: float = 0.01) -> TestResult:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise StatisticsError(f"length mismatch: {a.shape} vs {b.shape}")
    d = a - b
    d = d[d != 0]
    if d.size == 0:
        raise StatisticsError("all differences zero")
    n = d.size
    if n < WILCOXON_MIN_N:
        raise StatisticsError(f"Wilcoxon needs n >= {WILCOXON_MIN_N} non-zero differences, got {n}")
    ranks = sps.rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    w = min(w_plus, w_minus)
    tied = np.unique(np.abs(d)).size != n
    if n <= EXACT_MAX_N and not tied:
        p = wilcoxon_exact_p(w, n)
    else:
        _, tie_counts = np.unique(ranks, return_counts=True)
        mean = n * (n + 1) / 4
        var = n * (n + 1) * (2 * n + 1) / 24 - np.sum(tie_counts**3 - tie_counts) / 48
        z = (abs(w - mean) - 0.5) / math.sqrt(var) if var > 0 else 0.0
        p = float(min(1.0, 2 * sps.norm.sf(max(z, 0.0))))
    return TestResult("wilcoxon", w, p, alpha, p < alpha, n)


def adjust_pvalues(pvalues: Sequence[float], method: str = "none") -> list[float]:
    """Family-wise adjustment: ``none``, ``bonferroni`` or ``holm``."""
    p = np.asarray(pvalues, dtype=float)
    m = p.size
    if method == "none" or m == 0:
        return p.tolist()
    if method == "bonferroni":
        return np.minimum(p * m, 1.0).tolist()
    if method == "holm":
        order = np.argsort(p, kind="stable")
        adj = np.maximum.accumulate((m - np.arange(m)) * p[order])
        out = np.empty(m)
        out[order] = np.minimum(adj, 1.0)
        return out.tolist()
    raise ValueError(f"unknown correction {method!r}")
