"""Package-level software metric tables and their aggregation to services."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

from .network import NodeKind, TemporalNetwork, _load_structured


class MetricDataError(ValueError):
    pass


class Category(str, Enum):
    SIZE = "size"
    COMPLEXITY = "complexity"
    QUALITY = "quality"


class Kind(str, Enum):
    COUNT = "count"
    RATIO = "ratio"


class Aggregation(str, Enum):
    SUM = "Sum"
    AVG = "Avg"
    MAX = "Max"


AGGREGATIONS = {
    Kind.COUNT: (Aggregation.SUM, Aggregation.AVG, Aggregation.MAX),
    Kind.RATIO: (Aggregation.AVG, Aggregation.MAX),
}

# tool tag -> delimiter of its exported table
SCHEMAS = {"understand": ",", "jasome": ",", "sonarqube": ",", "generic": ","}


@dataclass(frozen=True)
class MetricDescriptor:
    name: str
    category: Category
    kind: Kind
    source: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "category", Category(self.category))
        object.__setattr__(self, "kind", Kind(self.kind))


@dataclass(frozen=True, order=True)
class MetricKey:
    """One aggregated service-level metric, e.g. ``jasome:Max(SIX)``."""

    source: str
    name: str
    aggregation: Aggregation

    @property
    def label(self) -> str:
        return f"{self.source}:{self.aggregation.value}({self.name})"


def load_descriptors(path: str | Path) -> dict[tuple[str, str], MetricDescriptor]:
    path = Path(path)
    doc = _load_structured(path.read_text(encoding="utf-8"), path.suffix)
    items = doc.get("metrics", []) if isinstance(doc, Mapping) else doc
    out: dict[tuple[str, str], MetricDescriptor] = {}
    for item in items:
        try:
            d = MetricDescriptor(item["name"], item["category"], item["kind"], item["source"])
        except (KeyError, ValueError) as exc:
            raise MetricDataError(f"bad descriptor {item!r}: {exc}") from exc
        if (d.source, d.name) in out:
            raise MetricDataError(f"duplicate descriptor {d.source}:{d.name}")
        out[(d.source, d.name)] = d
    return out


@dataclass(frozen=True)
class PackageMetricTable:
    release: str
    source: str
    values: dict[tuple[str, str], float]  # (package, metric) -> value; absent cells omitted
    metrics: tuple[str, ...] = ()

    @property
    def packages(self) -> list[str]:
        return sorted({p for p, _ in self.values})

    def __len__(self) -> int:
        return len(self.values)


def load_metric_table(file: str | Path, schema: str, release: str | None = None) -> PackageMetricTable:
    """Read a tool export: header row, first column ``package``, one column per metric."""
    if schema not in SCHEMAS:
        raise MetricDataError(f"unknown schema {schema!r}")
    file = Path(file)
    release = release or file.parent.name
    with file.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=SCHEMAS[schema])
        header = next(reader, None)
        if not header or header[0].strip() != "package":
            raise MetricDataError(f"{file}: first header column must be 'package'")
        metrics = tuple(h.strip() for h in header[1:])
        values: dict[tuple[str, str], float] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or not any(c.strip() for c in row):
                continue
            package = row[0].strip()
            for metric, cell in zip(metrics, row[1:]):
                cell = cell.strip()
                if cell == "":
                    continue
                try:
                    value = float(cell)
                except ValueError:
                    value = math.nan
                if not math.isfinite(value):
                    raise MetricDataError(f"{file}:{lineno}: non-numeric cell {cell!r} for {metric}")
                if (package, metric) in values:
                    raise MetricDataError(f"{file}:{lineno}: duplicate ({package}, {metric})")
                values[(package, metric)] = value
    return PackageMetricTable(release, schema, values, metrics)


@dataclass(frozen=True)
class PackageServiceMap:
    release: str
    entries: dict[str, str]

    def __len__(self) -> int:
        return len(self.entries)

    def check_total(self, packages: Iterable[str]) -> None:
        missing = sorted(set(packages) - set(self.entries))
        if missing:
            raise MetricDataError(f"unmapped packages in release {self.release}: {', '.join(missing)}")


def load_mapping(file: str | Path, release: str | None = None) -> PackageServiceMap:
    file = Path(file)
    entries: dict[str, str] = {}
    for lineno, line in enumerate(file.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        package, sep, service = (s.strip() for s in line.partition("="))
        if not sep or not package or not service:
            raise MetricDataError(f"{file}:{lineno}: expected 'package=service'")
        if package in entries:
            raise MetricDataError(f"{file}:{lineno}: duplicate package {package!r}")
        entries[package] = service
    return PackageServiceMap(release or file.stem, entries)


@dataclass
class ServiceMetricPanel:
    """Cells keyed by ``(service, release, MetricKey)``."""

    cells: dict[tuple[str, str, MetricKey], float] = field(default_factory=dict)
    descriptors: dict[tuple[str, str], MetricDescriptor] = field(default_factory=dict)
    releases: tuple[str, ...] = ()

    def category(self, key: MetricKey) -> Category:
        return self.descriptors[(key.source, key.name)].category

    def metric_keys(self) -> list[MetricKey]:
        return sorted({k for _, _, k in self.cells})

    def values(self, release: str, key: MetricKey) -> dict[str, float]:
        return dict(self._index().get((release, key), {}))

    def _index(self) -> dict[tuple[str, MetricKey], dict[str, float]]:
        cached = self.__dict__.get("_cache")
        if cached is None or cached[0] != len(self.cells):
            index: dict[tuple[str, MetricKey], dict[str, float]] = defaultdict(dict)
            for (s, r, k), v in self.cells.items():
                index[(r, k)][s] = v
            cached = (len(self.cells), dict(index))
            self.__dict__["_cache"] = cached
        return cached[1]

    def services(self, release: str) -> list[str]:
        return sorted({s for s, r, _ in self.cells if r == release})

    def __len__(self) -> int:
        return len(self.cells)


def aggregate_to_services(
    table: PackageMetricTable,
    mapping: PackageServiceMap,
    descriptors: Mapping[tuple[str, str], MetricDescriptor],
) -> ServiceMetricPanel:
    """Counts get Sum/Avg/Max, ratios only Avg/Max; missing package values are skipped."""
    mapping.check_total(table.packages)
    grouped: dict[tuple[str, str], list[float]] = defaultdict(list)
    for (package, metric), value in sorted(table.values.items()):
        grouped[(mapping.entries[package], metric)].append(value)

    panel = ServiceMetricPanel(descriptors=dict(descriptors), releases=(table.release,))
    for (service, metric), vals in grouped.items():
        desc = descriptors.get((table.source, metric))
        if desc is None:
            raise MetricDataError(f"no descriptor for {table.source}:{metric}")
        stats = {
            Aggregation.SUM: math.fsum(vals),
            Aggregation.AVG: math.fsum(vals) / len(vals),
            Aggregation.MAX: max(vals),
        }
        for agg in AGGREGATIONS[desc.kind]:
            panel.cells[(service, table.release, MetricKey(table.source, metric, agg))] = stats[agg]
    return panel


def merge_panels(panels: Iterable[ServiceMetricPanel]) -> ServiceMetricPanel:
    out = ServiceMetricPanel()
    releases: list[str] = []
    for p in panels:
        out.cells.update(p.cells)
        out.descriptors.update(p.descriptors)
        releases.extend(r for r in p.releases if r not in releases)
    out.releases = tuple(releases)
    return out


def panel_align(panel: ServiceMetricPanel, tn: TemporalNetwork) -> tuple[ServiceMetricPanel, list[tuple[str, str]]]:
    """Keep cells whose service is a present, non-database node at that release.

    Returns the aligned panel and the sorted ``(release, service)`` pairs dropped.
    """
    allowed: dict[str, set[str]] = {}
    for t, release in enumerate(tn.releases):
        allowed[release] = {
            n for i, n in enumerate(tn.registry)
            if tn.presence[i, t] and tn.kinds[i] is NodeKind.SERVICE
        }
    kept: dict[tuple[str, str, MetricKey], float] = {}
    dropped = set()
    for (service, release, key), value in panel.cells.items():
        if service in allowed.get(release, ()):
            kept[(service, release, key)] = value
        else:
            dropped.add((release, service))
    releases = tuple(r for r in panel.releases if r in allowed)
    return ServiceMetricPanel(kept, dict(panel.descriptors), releases), sorted(dropped)
