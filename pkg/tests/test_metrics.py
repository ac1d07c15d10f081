import csv
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tempcent.metrics import (
    Aggregation,
    Category,
    MetricDataError,
    MetricDescriptor,
    MetricKey,
    PackageMetricTable,
    PackageServiceMap,
    aggregate_to_services,
    load_descriptors,
    load_mapping,
    load_metric_table,
    merge_panels,
    panel_align,
)
from tempcent.network import NodeKind, build_temporal_network

from .conftest import snap

DESC = {
    ("jasome", "TLOC"): MetricDescriptor("TLOC", "size", "count", "jasome"),
    ("jasome", "SIX"): MetricDescriptor("SIX", "complexity", "ratio", "jasome"),
}


def write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def test_aggregation_example(tmp_path):
    table = load_metric_table(
        write(tmp_path / "r1" / "jasome.csv", "package,TLOC,SIX\np.a,10,0.2\np.b,20,0.4\nq,5,\n"), "jasome"
    )
    mapping = PackageServiceMap("r1", {"p.a": "svc", "p.b": "svc", "q": "other"})
    panel = aggregate_to_services(table, mapping, DESC)
    tloc = {agg: panel.values("r1", MetricKey("jasome", "TLOC", agg))["svc"] for agg in Aggregation}
    assert tloc == {Aggregation.SUM: 30, Aggregation.AVG: 15, Aggregation.MAX: 20}
    six = MetricKey("jasome", "SIX", Aggregation.AVG)
    assert panel.values("r1", six) == {"svc": pytest.approx(0.3)}
    # ratios are never summed; an empty cell leaves the service without a value
    assert panel.values("r1", MetricKey("jasome", "SIX", Aggregation.SUM)) == {}
    assert panel.category(six) is Category.COMPLEXITY
    assert six.label == "jasome:Avg(SIX)"
    assert len(panel) == 3 + 2 + 3


def test_unmapped_package_is_named(tmp_path):
    table = PackageMetricTable("r1", "jasome", {("p.a", "TLOC"): 1.0, ("p.zz", "TLOC"): 2.0})
    with pytest.raises(MetricDataError, match="p.zz"):
        aggregate_to_services(table, PackageServiceMap("r1", {"p.a": "svc"}), DESC)


def test_unknown_metric_descriptor():
    table = PackageMetricTable("r1", "jasome", {("p", "WMC"): 1.0})
    with pytest.raises(MetricDataError, match="no descriptor"):
        aggregate_to_services(table, PackageServiceMap("r1", {"p": "svc"}), DESC)


@pytest.mark.parametrize(
    "text, match",
    [
        ("pkg,TLOC\np,1\n", "package"),
        ("package,TLOC\np,abc\n", "non-numeric"),
        ("package,TLOC\np,nan\n", "non-numeric"),
        ("package,TLOC\np,1\np,2\n", "duplicate"),
    ],
)
def test_metric_table_rejects(tmp_path, text, match):
    with pytest.raises(MetricDataError, match=match):
        load_metric_table(write(tmp_path / "r" / "t.csv", text), "generic")


def test_unknown_schema(tmp_path):
    with pytest.raises(MetricDataError):
        load_metric_table(write(tmp_path / "r" / "t.csv", "package,a\n"), "sloccount")


def test_mapping_file(tmp_path):
    m = load_mapping(write(tmp_path / "v1.map", "# header\np.a = svc  # trailing\n\np.b=svc\n"))
    assert m.release == "v1" and m.entries == {"p.a": "svc", "p.b": "svc"}
    with pytest.raises(MetricDataError, match="duplicate"):
        load_mapping(write(tmp_path / "dup.map", "p=a\np=b\n"))
    with pytest.raises(MetricDataError):
        load_mapping(write(tmp_path / "bad.map", "just-a-package\n"))


def test_descriptors(tmp_path):
    doc = [{"name": "X", "source": "s", "category": "quality", "kind": "count"}]
    assert load_descriptors(write(tmp_path / "d.json", json.dumps(doc)))[("s", "X")].category is Category.QUALITY
    bad = [{"name": "X", "source": "s", "category": "style", "kind": "count"}]
    with pytest.raises(MetricDataError):
        load_descriptors(write(tmp_path / "e.json", json.dumps(bad)))
    with pytest.raises(MetricDataError, match="duplicate"):
        load_descriptors(write(tmp_path / "f.json", json.dumps(doc * 2)))


def test_panel_align_drops_absent_and_databases():
    tn = build_temporal_network([
        snap("r1", {("svc", "db")}, kinds={"db": NodeKind.DATABASE}),
        snap("r2", {("svc", "new")}),
    ])
    key = MetricKey("jasome", "TLOC", Aggregation.SUM)
    table1 = PackageMetricTable("r1", "jasome", {("a", "TLOC"): 1.0, ("b", "TLOC"): 2.0, ("c", "TLOC"): 3.0})
    table2 = PackageMetricTable("r2", "jasome", {("a", "TLOC"): 1.0, ("c", "TLOC"): 3.0})
    m = {"a": "svc", "b": "db", "c": "new"}
    panel = merge_panels([
        aggregate_to_services(table1, PackageServiceMap("r1", m), DESC),
        aggregate_to_services(table2, PackageServiceMap("r2", m), DESC),
    ])
    aligned, dropped = panel_align(panel, tn)
    assert dropped == [("r1", "db"), ("r1", "new")]
    assert aligned.values("r1", key) == {"svc": 1.0}
    assert aligned.values("r2", key) == {"svc": 1.0, "new": 3.0}
    assert aligned.releases == ("r1", "r2")


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.floats(0, 1e6)), min_size=1, max_size=12))
def test_aggregation_invariants(rows):
    values = {(f"p{i}", "TLOC"): v for i, (_, v) in enumerate(rows)}
    mapping = PackageServiceMap("r", {f"p{i}": f"s{g}" for i, (g, _) in enumerate(rows)})
    panel = aggregate_to_services(PackageMetricTable("r", "jasome", values), mapping, DESC)
    get = {agg: panel.values("r", MetricKey("jasome", "TLOC", agg)) for agg in Aggregation}
    for service, total in get[Aggregation.SUM].items():
        n = sum(1 for g, _ in rows if f"s{g}" == service)
        assert get[Aggregation.AVG][service] <= get[Aggregation.MAX][service] * (1 + 1e-12)
        assert get[Aggregation.MAX][service] <= total * (1 + 1e-12)
        assert get[Aggregation.AVG][service] * n == pytest.approx(total, rel=1e-9, abs=1e-9)


def test_fixture_cell_count(fixture_dir):
    descriptors = load_descriptors(fixture_dir / "descriptors.json")
    release = "v0.0.2"
    mapping = load_mapping(fixture_dir / "mapping" / f"{release}.map")
    expected = 0
    panels = []
    for tool in ("understand", "jasome", "sonarqube"):
        path = fixture_dir / "metrics" / release / f"{tool}.csv"
        # independent count: services with at least one reported value, times the aggregations
        with path.open() as fh:
            reader = csv.reader(fh)
            header = next(reader)
            reported = {(mapping.entries[row[0]], m) for row in reader for m, c in zip(header[1:], row[1:]) if c}
        for service, metric in reported:
            expected += 3 if descriptors[(tool, metric)].kind.value == "count" else 2
        panels.append(aggregate_to_services(load_metric_table(path, tool), mapping, descriptors))
    assert len(merge_panels(panels)) == expected
