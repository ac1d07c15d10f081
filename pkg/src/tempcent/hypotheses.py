"""Hypothesis sweeps over the service metric panel and the ledgers of rejections."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Literal, Mapping

import numpy as np
from scipy import stats as sps

from .metrics import Category, MetricKey, ServiceMetricPanel
from .mover import CcpTimeline
from .stats import (
    StatisticsError,
    TestResult,
    adjust_pvalues,
    anderson_darling_normal,
    rho_band,
    spearman_rho,
    wilcoxon_signed_rank,
)

# release -> centrality name -> service -> value
CentralityTable = Mapping[str, Mapping[str, Mapping[str, float]]]

CATEGORIES = tuple(c.value for c in Category)


@dataclass
class HypothesisLedger:
    """Rejected-null counts per (category, release), one row per category plus a total row."""

    releases: tuple[str, ...]
    categories: tuple[str, ...] = CATEGORIES
    rejected: dict[tuple[str, str], int] = field(default_factory=dict)
    tested: dict[tuple[str, str], int] = field(default_factory=dict)
    flags: dict[str, str] = field(default_factory=dict)

    def record(self, category: str, release: str, rejected: bool, tested: bool = True) -> None:
        key = (category, release)
        self.rejected.setdefault(key, 0)
        self.tested.setdefault(key, 0)
        if tested:
            self.tested[key] += 1
            self.rejected[key] += int(rejected)

    def count(self, category: str, release: str) -> int:
        return self.rejected.get((category, release), 0)

    def release_total(self, release: str) -> int:
        return sum(self.count(c, release) for c in self.categories)

    def category_total(self, category: str) -> int:
        return sum(self.count(category, r) for r in self.releases)

    @property
    def total(self) -> int:
        return sum(self.rejected.values())

    @property
    def total_tested(self) -> int:
        return sum(self.tested.values())

    def header(self) -> tuple[str, ...]:
        return ("category", *self.releases, "total")

    def rows(self) -> list[tuple]:
        out = [
            (c, *(self.count(c, r) for r in self.releases), self.category_total(c))
            for c in self.categories
        ]
        out.append(("total", *(self.release_total(r) for r in self.releases), self.total))
        return out


# -- normality screening ----------------------------------------------------


@dataclass
class ScreeningReport:
    results: list[tuple[MetricKey, str, TestResult | None, str]]
    retained: list[MetricKey]
    excluded: list[MetricKey]
    insufficient: list[MetricKey]
    ledger: HypothesisLedger


def screen_normality(panel: ServiceMetricPanel, alpha: float = 0.05) -> ScreeningReport:
    """Anderson-Darling per (metric, release); keep metrics non-normal in every release."""
    ledger = HypothesisLedger(panel.releases)
    results = []
    retained, excluded, insufficient = [], [], []
    for key in panel.metric_keys():
        category = panel.category(key).value
        keep, short = True, False
        for release in panel.releases:
            sample = [v for _, v in sorted(panel.values(release, key).items())]
            try:
                res = anderson_darling_normal(sample, alpha)
            except StatisticsError as exc:
                note = str(exc)
                short = short or "n >=" in note
                results.append((key, release, None, note))
                ledger.record(category, release, False, tested=False)
                keep = False
                continue
            results.append((key, release, res, ""))
            ledger.record(category, release, res.rejected)
            keep = keep and res.rejected
        if keep:
            retained.append(key)
        else:
            excluded.append(key)
            if short:
                insufficient.append(key)
    return ScreeningReport(results, retained, excluded, insufficient, ledger)


# -- RQ1: Spearman sweep ---------------------------------------------------


@dataclass(frozen=True)
class CorrelationCell:
    release: str
    category: str
    metric: MetricKey | str
    centrality: str
    rho: float | None
    p_value: float | None
    band: str
    rejected: bool
    n: int
    note: str = ""


CORRELATION_HEADER = ("release", "category", "metric", "aggregation", "centrality", "rho", "p", "band", "rejected")


def _paired(a: Mapping[str, float], b: Mapping[str, float]) -> tuple[list[float], list[float]]:
    common = sorted(set(a) & set(b))
    return [a[s] for s in common], [b[s] for s in common]


def _correlate(release, category, metric, centrality, x, y, alpha) -> CorrelationCell:
    try:
        r = spearman_rho(x, y, alpha)
    except StatisticsError as exc:
        return CorrelationCell(release, category, metric, centrality, None, None, "", False, len(x), str(exc))
    return CorrelationCell(release, category, metric, centrality, r.rho, r.p_value, rho_band(r.rho), r.rejected, r.n)


def _apply_correction(cells: list[CorrelationCell], alpha: float, correction: str) -> list[CorrelationCell]:
    if correction == "none":
        return cells
    idx = [i for i, c in enumerate(cells) if c.p_value is not None]
    adjusted = adjust_pvalues([cells[i].p_value for i in idx], correction)
    out = list(cells)
    for i, p in zip(idx, adjusted):
        c = cells[i]
        out[i] = CorrelationCell(c.release, c.category, c.metric, c.centrality, c.rho, p, c.band, p < alpha, c.n, c.note)
    return out


@dataclass
class Rq1Result:
    cells: list[CorrelationCell]
    ledger: HypothesisLedger
    consistent: list[MetricKey]


def rq1_correlation_sweep(
    panel: ServiceMetricPanel,
    centralities: CentralityTable,
    alpha: float = 0.01,
    metrics: Iterable[MetricKey] | None = None,
    correction: str = "none",
) -> Rq1Result:
    keys = sorted(metrics) if metrics is not None else panel.metric_keys()
    cells = []
    for key in keys:
        category = panel.category(key).value
        for release in panel.releases:
            values = panel.values(release, key)
            for name, column in sorted(centralities.get(release, {}).items()):
                x, y = _paired(values, column)
                cells.append(_correlate(release, category, key, name, x, y, alpha))
    cells = _apply_correction(cells, alpha, correction)

    ledger = HypothesisLedger(panel.releases)
    hit: dict[MetricKey, set[str]] = defaultdict(set)
    for c in cells:
        ledger.record(c.category, c.release, c.rejected, tested=c.p_value is not None)
        if c.rejected:
            hit[c.metric].add(c.release)
    consistent = [k for k in keys if hit[k] >= set(panel.releases)]
    return Rq1Result(cells, ledger, consistent)


# -- RQ2: CCP vs software metrics -----------------------------------------

Rq2Mode = Literal["paired", "groups"]
UNDEFINED = "fom-undefined"
RESULT_HEADER = ("release", "category", "metric", "test", "statistic", "p", "rejected")


@dataclass(frozen=True)
class Rq2Row:
    release: str
    category: str
    metric: MetricKey
    test: str
    statistic: float | None
    p_value: float | None
    rejected: bool
    n: int
    note: str = ""


@dataclass
class Rq2Result:
    rows: list[Rq2Row]
    ledger: HypothesisLedger
    mode: str


def _kruskal(codes: list[int], values: list[float], alpha: float) -> TestResult:
    groups = [[v for c, v in zip(codes, values) if c == k] for k in (1, 2, 3, 4)]
    groups = [g for g in groups if g]
    if len(groups) < 2:
        raise StatisticsError("fewer than two CCP classes populated")
    if len({v for g in groups for v in g}) == 1:
        raise StatisticsError("all values identical")
    h, p = sps.kruskal(*groups)
    return TestResult("kruskal", float(h), float(p), alpha, bool(p < alpha), len(values))


def rq2_ccp_sweep(
    panel: ServiceMetricPanel,
    timeline: CcpTimeline,
    alpha: float = 0.01,
    mode: Rq2Mode = "paired",
    metrics: Iterable[MetricKey] | None = None,
) -> Rq2Result:
    """Signed-rank test of (CCP code, metric value) pairs per release and metric.

    ``mode="groups"`` instead compares the metric's distribution across the four
    CCP classes (Kruskal-Wallis).
    """
    keys = sorted(metrics) if metrics is not None else panel.metric_keys()
    ledger = HypothesisLedger(panel.releases)
    rows = []
    test_name = "wilcoxon" if mode == "paired" else "kruskal"
    for release in panel.releases:
        try:
            entry = timeline[release]
        except KeyError:
            entry = None
        for key in keys:
            category = panel.category(key).value
            if entry is None or not entry.defined:
                ledger.record(category, release, False, tested=False)
                ledger.flags[release] = "FOM undefined"
                rows.append(Rq2Row(release, category, key, UNDEFINED, None, None, False, 0, "FOM undefined"))
                continue
            codes = {n: float(r.value) for n, r in entry.ranks.items()}
            c, v = _paired(codes, panel.values(release, key))
            try:
                if mode == "paired":
                    res = wilcoxon_signed_rank(c, v, alpha)
                else:
                    res = _kruskal([int(x) for x in c], v, alpha)
            except StatisticsError as exc:
                ledger.record(category, release, False, tested=False)
                rows.append(Rq2Row(release, category, key, test_name, None, None, False, len(c), str(exc)))
                continue
            ledger.record(category, release, res.rejected)
            rows.append(Rq2Row(release, category, key, test_name, res.statistic, res.p_value, res.rejected, res.n))
    return Rq2Result(rows, ledger, mode)


def fom_centrality_correlation(
    timeline: CcpTimeline,
    centralities: CentralityTable,
    alpha: float = 0.01,
    fom_name: str = "taylor:norm_fom",
) -> list[CorrelationCell]:
    """Spearman of Norm(FOM) against every other centrality, per defined release."""
    cells = []
    for entry in timeline.entries:
        if not entry.defined:
            continue
        for name, column in sorted(centralities.get(entry.release, {}).items()):
            if name == fom_name:
                continue
            x, y = _paired(entry.norm_fom, column)
            cells.append(_correlate(entry.release, "centrality", "norm_fom", name, x, y, alpha))
    return cells
