"""End-to-end orchestration: preprocess, centralities, CCP, ingestion, statistics, reports."""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable

from . import svg
from .hypotheses import (
    CORRELATION_HEADER,
    RESULT_HEADER,
    CentralityTable,
    CorrelationCell,
    HypothesisLedger,
    Rq1Result,
    Rq2Result,
    ScreeningReport,
    fom_centrality_correlation,
    rq1_correlation_sweep,
    rq2_ccp_sweep,
    screen_normality,
)
from .metrics import (
    MetricKey,
    ServiceMetricPanel,
    aggregate_to_services,
    load_descriptors,
    load_mapping,
    load_metric_table,
    merge_panels,
    panel_align,
)
from .mover import CCP_HEADER, CcpTimeline, ccp_timeline, time_averaged_centrality
from .network import NodeKind, TemporalNetwork, build_temporal_network, load_manifest, prefix_network, preprocess
from .supra import (
    ALGORITHMS,
    CENTRALITY_HEADER,
    CentralityTensor,
    ConvergenceError,
    centrality_export,
    fmt,
    temporal_centrality,
    write_table,
)

FORMATS = ("csv", "json", "svg")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    manifest: Path | None = None
    metrics_dir: Path | None = None
    mapping_dir: Path | None = None
    descriptors: Path | None = None
    algorithms: tuple[str, ...] = ("taylor", "yin", "liu")
    epsilon: float = 0.5
    alpha_correlation: float = 0.01
    alpha_ad: float = 0.05
    symmetrize: bool = True
    out: Path = Path("out")
    formats: tuple[str, ...] = ("csv", "svg")
    preprocess: bool = True
    solver: str = "power"
    fom_method: str = "analytic"
    ccp_thresholds: str = "per-release"
    rq2_mode: str = "paired"
    fom_pairing: str = "latest"
    correction: str = "none"
    services: tuple[str, ...] = ()
    workers: int = 1

    def validate(self, need: Iterable[str] = ("manifest",)) -> None:
        for name in need:
            path = getattr(self, name)
            if path is None:
                raise ConfigError(f"missing required option --{name.replace('_', '-')}")
            if not Path(path).exists():
                raise FileNotFoundError(f"{name.replace('_', '-')} path does not exist: {path}")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown or not self.algorithms:
            raise ConfigError(f"unknown algorithms: {sorted(unknown)}")
        for name in ("alpha_correlation", "alpha_ad"):
            if not 0 < getattr(self, name) < 1:
                raise ConfigError(f"{name} must lie in (0, 1)")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if set(self.formats) - set(FORMATS):
            raise ConfigError(f"unknown formats: {sorted(set(self.formats) - set(FORMATS))}")
        choices = {
            "solver": ("power", "dense"),
            "fom_method": ("analytic", "numerical"),
            "ccp_thresholds": ("per-release", "final"),
            "rq2_mode": ("paired", "groups"),
            "fom_pairing": ("latest", "prefix"),
            "correction": ("none", "bonferroni", "holm"),
        }
        for name, allowed in choices.items():
            if getattr(self, name) not in allowed:
                raise ConfigError(f"{name} must be one of {allowed}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def parameters(self) -> dict[str, Any]:
        out = {}
        for k, v in asdict(self).items():
            if k in ("out", "workers"):
                continue
            out[k] = v.as_posix() if isinstance(v, Path) else list(v) if isinstance(v, tuple) else v
        return out


# -- loading ---------------------------------------------------------------


def load_network(config: RunConfig) -> TemporalNetwork:
    snapshots = load_manifest(config.manifest)
    if config.preprocess:
        snapshots = [preprocess(s) for s in snapshots]
    return build_temporal_network(snapshots)


def load_panel(config: RunConfig, tn: TemporalNetwork) -> tuple[ServiceMetricPanel, list[tuple[str, str]]]:
    descriptors = load_descriptors(config.descriptors)
    sources = sorted({src for src, _ in descriptors})
    panels = []
    for release in tn.releases:
        mapping_file = Path(config.mapping_dir) / f"{release}.map"
        if not mapping_file.exists():
            raise FileNotFoundError(f"mapping file not found: {mapping_file}")
        mapping = load_mapping(mapping_file, release)
        for source in sources:
            table_file = Path(config.metrics_dir) / release / f"{source}.csv"
            if not table_file.exists():
                continue
            table = load_metric_table(table_file, source, release)
            panels.append(aggregate_to_services(table, mapping, descriptors))
    panel = merge_panels(panels)
    panel.descriptors.update(descriptors)
    panel.releases = tn.releases
    return panel_align(panel, tn)


# -- centralities ----------------------------------------------------------


def compute_tensors(
    tn: TemporalNetwork, config: RunConfig
) -> tuple[dict[str, CentralityTensor], list[dict[str, str]]]:
    def one(alg: str):
        try:
            return alg, temporal_centrality(tn, alg, config.epsilon, symmetrize=config.symmetrize, solver=config.solver), None
        except ConvergenceError as exc:
            return alg, None, {"algorithm": alg, "prefix": str(tn.n_layers), "error": str(exc)}

    results = _map(one, config.algorithms, config.workers)
    tensors = {alg: t for alg, t, _ in results if t is not None}
    errors = [e for _, _, e in results if e is not None]
    return tensors, errors


def _map(fn, items, workers: int) -> list:
    items = list(items)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _service_mask(tn: TemporalNetwork, t: int) -> list[int]:
    return [i for i in range(tn.n_nodes) if tn.presence[i, t] and tn.kinds[i] is NodeKind.SERVICE]


def service_centralities(
    tn: TemporalNetwork,
    tensors: dict[str, CentralityTensor],
    timeline: CcpTimeline | None = None,
    tac: Iterable[float] | None = None,
) -> dict[str, dict[str, dict[str, float]]]:
    """Per release, every service-level centrality column of the latest network.

    Marginal layer centrality is one number per release and is not a column.
    """
    tac = list(tac) if tac is not None else None
    table: dict[str, dict[str, dict[str, float]]] = {}
    for t, release in enumerate(tn.releases):
        idx = _service_mask(tn, t)
        cols: dict[str, dict[str, float]] = {}
        for alg, ct in sorted(tensors.items()):
            cols[f"{alg}:joint"] = {tn.registry[i]: float(ct.W[i, t]) for i in idx}
            cols[f"{alg}:conditional"] = {tn.registry[i]: float(ct.Z[i, t]) for i in idx}
            cols[f"{alg}:mnc"] = {tn.registry[i]: float(ct.mnc[i]) for i in idx}
        if tac is not None:
            cols["taylor:tac"] = {tn.registry[i]: float(tac[i]) for i in idx}
        if timeline is not None:
            entry = timeline[release]
            if entry.defined:
                names = {tn.registry[i] for i in idx}
                cols["taylor:norm_fom"] = {n: v for n, v in entry.norm_fom.items() if n in names}
        table[release] = cols
    return table


def prefix_centralities(tn: TemporalNetwork, config: RunConfig) -> dict[str, dict[str, dict[str, float]]]:
    """Centralities of each accumulated prefix, read at its last layer."""

    def one(k: int):
        sub = prefix_network(tn, k)
        tensors, _ = compute_tensors(sub, RunConfig(**{**asdict(config), "workers": 1}))
        tac = time_averaged_centrality(sub, symmetrize=config.symmetrize, method=config.fom_method)
        return sub.releases[-1], service_centralities(sub, tensors, None, tac)[sub.releases[-1]]

    return dict(_map(one, range(1, tn.n_layers + 1), config.workers))


# -- writers ---------------------------------------------------------------


class BundleWriter:
    """Writes tables/figures under ``out`` and remembers their digests."""

    def __init__(self, out: Path, formats: Iterable[str]) -> None:
        self.out = Path(out)
        self.formats = tuple(formats)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files: dict[str, str] = {}

    def _write(self, name: str, text: str) -> None:
        path = self.out / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="\n")
        self.files[name] = hashlib.sha256(text.encode("utf-8")).hexdigest()

    def table(self, stem: str, header: tuple[str, ...], rows: list[tuple]) -> None:
        rows = [tuple("" if v is None else v for v in r) for r in rows]
        if "csv" in self.formats:
            self._write(f"{stem}.csv", write_table(header, rows))
        if "json" in self.formats:
            records = [dict(zip(header, map(str, r))) for r in rows]
            self._write(f"{stem}.json", json.dumps(records, indent=1, sort_keys=True) + "\n")

    def figure(self, stem: str, text: str) -> None:
        if "svg" in self.formats:
            self._write(f"{stem}.svg", text)

    def json(self, name: str, payload: Any) -> None:
        self._write(name, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _opt(value: float | None) -> str:
    return "" if value is None else fmt(value)


def _bool(b: bool) -> str:
    return "true" if b else "false"


def write_ledger(writer: BundleWriter, stem: str, ledger: HypothesisLedger) -> None:
    writer.table(stem, ledger.header(), ledger.rows())


def correlation_rows(cells: list[CorrelationCell]) -> list[tuple]:
    rows = []
    for c in cells:
        if isinstance(c.metric, MetricKey):
            metric, agg = f"{c.metric.source}:{c.metric.name}", c.metric.aggregation.value
        else:
            metric, agg = str(c.metric), ""
        rows.append((c.release, c.category, metric, agg, c.centrality, _opt(c.rho), _opt(c.p_value), c.band, _bool(c.rejected)))
    return rows


# -- commands --------------------------------------------------------------


@dataclass
class Bundle:
    tn: TemporalNetwork
    tensors: dict[str, CentralityTensor] = field(default_factory=dict)
    timeline: CcpTimeline | None = None
    screening: ScreeningReport | None = None
    rq1: Rq1Result | None = None
    rq2: Rq2Result | None = None
    fom_cells: list[CorrelationCell] = field(default_factory=list)
    errors: list[dict[str, str]] = field(default_factory=list)
    dropped: list[tuple[str, str]] = field(default_factory=list)


def _chart_services(tn: TemporalNetwork, config: RunConfig) -> list[str]:
    if config.services:
        missing = sorted(set(config.services) - set(tn.registry))
        if missing:
            raise ConfigError(f"unknown services for charts: {missing}")
        return list(config.services)
    return [n for n, k in zip(tn.registry, tn.kinds) if k is NodeKind.SERVICE]


def emit_centrality(writer: BundleWriter, tn: TemporalNetwork, tensors: dict[str, CentralityTensor], config: RunConfig) -> None:
    chart = _chart_services(tn, config)
    for alg in config.algorithms:
        ct = tensors.get(alg)
        if ct is None:
            continue
        writer.table(f"centrality_{alg}", CENTRALITY_HEADER, centrality_export(ct))
        for metric, arr in (("joint", ct.W), ("conditional", ct.Z)):
            series = {
                n: [float(arr[tn.index(n), t]) if tn.presence[tn.index(n), t] else None for t in range(tn.n_layers)]
                for n in chart
            }
            writer.figure(f"trajectories_{alg}_{metric}", svg.line_chart(series, tn.releases, f"{alg}: {metric} centrality", metric))
        writer.figure(f"mlc_{alg}", svg.line_chart({"MLC": [float(x) for x in ct.mlc]}, tn.releases, f"{alg}: marginal layer centrality", "MLC"))


def emit_ccp(writer: BundleWriter, tn: TemporalNetwork, timeline: CcpTimeline, config: RunConfig) -> None:
    writer.table("ccp", CCP_HEADER, timeline.rows())
    chart = _chart_services(tn, config)
    series = {n: [e.ranks[n].label if e.defined and n in e.ranks else None for e in timeline.entries] for n in chart}
    writer.figure("ccp", svg.ccp_step_chart(series, timeline.releases, [not e.defined for e in timeline.entries]))


def emit_correlate(writer: BundleWriter, panel: ServiceMetricPanel, screening: ScreeningReport, rq1: Rq1Result) -> None:
    rows = []
    for key, release, res, note in screening.results:
        rows.append((
            release, panel.category(key).value, key.label, "anderson_darling",
            _opt(res.statistic if res else None), _opt(res.p_value if res else None),
            _bool(bool(res and res.rejected)),
        ))
    writer.table("screening", RESULT_HEADER, rows)
    write_ledger(writer, "ledger_anderson_darling", screening.ledger)
    writer.table("correlations", CORRELATION_HEADER, correlation_rows(rq1.cells))
    write_ledger(writer, "ledger_spearman", rq1.ledger)
    writer.table(
        "consistent_metrics", ("category", "metric"),
        [(panel.category(k).value, k.label) for k in rq1.consistent],
    )
    releases = list(panel.releases)
    for category in ("size", "complexity", "quality"):
        by_row: dict[str, dict[str, CorrelationCell]] = {}
        for c in rq1.cells:
            if c.category == category:
                by_row.setdefault(f"{c.metric.label} ~ {c.centrality}", {})[c.release] = c
        labels = sorted(by_row)
        values = [[by_row[r][rel].rho if rel in by_row[r] else None for rel in releases] for r in labels]
        sig = [[bool(rel in by_row[r] and by_row[r][rel].rejected) for rel in releases] for r in labels]
        writer.figure(f"heatmap_{category}", svg.heatmap(labels, releases, values, sig, f"Spearman rho: {category} metrics"))


def emit_rq2(writer: BundleWriter, rq2: Rq2Result, fom_cells: list[CorrelationCell], config: RunConfig) -> None:
    rows = [
        (r.release, r.category, r.metric.label, r.test, _opt(r.statistic), _opt(r.p_value), _bool(r.rejected))
        for r in rq2.rows
    ]
    writer.table("rq2_tests", RESULT_HEADER, rows)
    write_ledger(writer, "ledger_rq2", rq2.ledger)
    writer.table("fom_correlations", CORRELATION_HEADER, correlation_rows(fom_cells))
    writer.json("rq2_meta.json", {
        "mode": rq2.mode,
        "test": "wilcoxon" if rq2.mode == "paired" else "kruskal",
        "flags": dict(sorted(rq2.ledger.flags.items())),
        "fom_pairing": config.fom_pairing,
    })


def compute_timeline(tn: TemporalNetwork, config: RunConfig) -> CcpTimeline:
    return ccp_timeline(
        tn, symmetrize=config.symmetrize, method=config.fom_method,
        thresholds=config.ccp_thresholds, workers=config.workers,
    )


def run_centrality(config: RunConfig) -> Bundle:
    config.validate(("manifest",))
    tn = load_network(config)
    tensors, errors = compute_tensors(tn, config)
    writer = BundleWriter(config.out, config.formats)
    emit_centrality(writer, tn, tensors, config)
    if errors:
        writer.json("errors.json", errors)
    return Bundle(tn, tensors, errors=errors)


def run_ccp(config: RunConfig) -> Bundle:
    config.validate(("manifest",))
    tn = load_network(config)
    timeline = compute_timeline(tn, config)
    emit_ccp(BundleWriter(config.out, config.formats), tn, timeline, config)
    return Bundle(tn, timeline=timeline)


def _statistics_inputs(config: RunConfig):
    tn = load_network(config)
    panel, dropped = load_panel(config, tn)
    tensors, errors = compute_tensors(tn, config)
    timeline = compute_timeline(tn, config)
    tac = time_averaged_centrality(tn, symmetrize=config.symmetrize, method=config.fom_method)
    table = service_centralities(tn, tensors, timeline, tac)
    return tn, panel, dropped, tensors, errors, timeline, table


def _rq1(panel, table, config) -> tuple[ScreeningReport, Rq1Result]:
    screening = screen_normality(panel, config.alpha_ad)
    rq1 = rq1_correlation_sweep(panel, table, config.alpha_correlation, screening.retained, config.correction)
    return screening, rq1


def _rq2(tn, panel, screening, timeline, table, config) -> tuple[Rq2Result, list[CorrelationCell]]:
    rq2 = rq2_ccp_sweep(panel, timeline, config.alpha_correlation, config.rq2_mode, screening.retained)
    pairing = table if config.fom_pairing == "latest" else prefix_centralities(tn, config)
    return rq2, fom_centrality_correlation(timeline, pairing, config.alpha_correlation)


NEEDS_PANEL = ("manifest", "metrics_dir", "mapping_dir", "descriptors")
PATH_OPTIONS = NEEDS_PANEL


def run_correlate(config: RunConfig) -> Bundle:
    config.validate(NEEDS_PANEL)
    tn, panel, dropped, tensors, errors, timeline, table = _statistics_inputs(config)
    screening, rq1 = _rq1(panel, table, config)
    emit_correlate(BundleWriter(config.out, config.formats), panel, screening, rq1)
    return Bundle(tn, tensors, timeline, screening, rq1, errors=errors, dropped=dropped)


def run_rq2(config: RunConfig) -> Bundle:
    config.validate(NEEDS_PANEL)
    tn, panel, dropped, tensors, errors, timeline, table = _statistics_inputs(config)
    screening = screen_normality(panel, config.alpha_ad)
    rq2, fom_cells = _rq2(tn, panel, screening, timeline, table, config)
    emit_rq2(BundleWriter(config.out, config.formats), rq2, fom_cells, config)
    return Bundle(tn, tensors, timeline, screening, rq2=rq2, fom_cells=fom_cells, errors=errors, dropped=dropped)


def _digest_inputs(config: RunConfig) -> dict[str, str]:
    """sha256 of every input file, keyed by option name and relative path."""
    named: dict[str, Path] = {"manifest": Path(config.manifest), "descriptors": Path(config.descriptors)}
    for label, root in (("metrics", config.metrics_dir), ("mapping", config.mapping_dir)):
        for p in Path(root).rglob("*"):
            if p.is_file():
                named[f"{label}/{p.relative_to(root).as_posix()}"] = p
    manifest_dir = Path(config.manifest).parent
    doc = json.loads(Path(config.manifest).read_text(encoding="utf-8"))
    for snap in doc.get("snapshots", []) if isinstance(doc, dict) else doc:
        rel = snap if isinstance(snap, str) else snap.get("file")
        named[f"snapshots/{rel}"] = manifest_dir / rel
    return {k: hashlib.sha256(named[k].read_bytes()).hexdigest() for k in sorted(named)}


def run_analyze(config: RunConfig) -> Bundle:
    config.validate(NEEDS_PANEL)
    tn, panel, dropped, tensors, errors, timeline, table = _statistics_inputs(config)
    writer = BundleWriter(config.out, config.formats)
    emit_centrality(writer, tn, tensors, config)
    emit_ccp(writer, tn, timeline, config)
    screening, rq1 = _rq1(panel, table, config)
    emit_correlate(writer, panel, screening, rq1)
    rq2, fom_cells = _rq2(tn, panel, screening, timeline, table, config)
    emit_rq2(writer, rq2, fom_cells, config)
    writer.table("dropped_services", ("release", "service"), dropped)
    if errors:
        writer.json("errors.json", errors)

    inputs = _digest_inputs(config)
    outputs = dict(sorted(writer.files.items()))
    params = {k: v for k, v in config.parameters().items() if k not in PATH_OPTIONS}
    run_digest = hashlib.sha256(
        json.dumps({"parameters": params, "inputs": inputs, "outputs": outputs}, sort_keys=True).encode()
    ).hexdigest()
    writer.json("run_manifest.json", {
        "parameters": config.parameters(),
        "inputs": inputs,
        "outputs": outputs,
        "run_digest": run_digest,
        "counts": {
            "anderson_darling": {"tested": screening.ledger.total_tested, "rejected": screening.ledger.total},
            "spearman": {"tested": rq1.ledger.total_tested, "rejected": rq1.ledger.total},
            "rq2": {"tested": rq2.ledger.total_tested, "rejected": rq2.ledger.total},
            "excluded_metrics": len(screening.excluded),
            "consistent_metrics": len(rq1.consistent),
        },
    })
    return Bundle(tn, tensors, timeline, screening, rq1, rq2, fom_cells, errors, dropped)
