"""Regenerate the bundled synthetic seven-release dataset.

The dataset imitates the shape of the train-ticket benchmark (service names,
the register/login/sso -> user/auth replacement, the food-service
restructuring) but every edge and metric value is synthetic.

    python scripts/make_fixture.py [target-dir]
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

RELEASES = ["v0.0.1", "v0.0.2", "v0.0.3", "v0.0.4", "v0.1.0", "v0.2.0", "v1.0.0"]

CORE = [
    "admin-basic-info", "admin-order", "admin-route", "admin-travel", "admin-user",
    "assurance", "basic", "cancel", "config", "consign-price", "consign", "contacts",
    "execute", "food", "inside-payment", "notification", "order-other", "order",
    "payment", "preserve-other", "preserve", "price", "rebook", "route-plan", "route",
    "seat", "security", "station", "ticketinfo", "train", "travel-plan", "travel",
    "travel2", "verification-code", "ui-dashboard",
]

FLOWS = {
    "ui-dashboard": ["preserve", "preserve-other", "travel", "travel2", "order", "order-other",
                     "cancel", "rebook", "contacts", "execute", "travel-plan", "route-plan",
                     "consign", "food", "assurance", "admin-order", "admin-travel", "admin-user"],
    "preserve": ["order", "ticketinfo", "seat", "security", "contacts", "travel", "food", "assurance", "consign", "station"],
    "preserve-other": ["order-other", "ticketinfo", "seat", "security", "contacts", "travel2", "food", "assurance", "consign", "station"],
    "travel": ["route", "train", "ticketinfo", "seat", "order"],
    "travel2": ["route", "train", "ticketinfo", "seat", "order-other"],
    "ticketinfo": ["basic"],
    "basic": ["station", "train", "route", "price"],
    "seat": ["order", "order-other", "config", "travel", "travel2"],
    "rebook": ["order", "order-other", "travel", "travel2", "seat", "inside-payment", "station"],
    "cancel": ["order", "order-other", "inside-payment", "notification"],
    "inside-payment": ["order", "order-other", "payment"],
    "execute": ["order", "order-other"],
    "travel-plan": ["route-plan", "travel", "travel2", "seat", "ticketinfo", "station"],
    "route-plan": ["route", "travel", "travel2", "station"],
    "admin-travel": ["travel", "travel2"],
    "admin-order": ["order", "order-other"],
    "admin-route": ["route"],
    "admin-basic-info": ["station", "train", "config", "price", "contacts"],
    "consign": ["consign-price"],
    "food": ["travel", "station"],
    "security": ["order", "order-other"],
}


def svc(name: str) -> str:
    return name if name.startswith(("mysql", "mongo")) else f"ts-{name}-service"


def services_for(release: str) -> list[str]:
    names = list(CORE)
    if release == "v0.0.1":
        names += ["register", "login", "sso"]
    else:
        names += ["user", "auth"]
    if release == "v1.0.0":
        names += ["food-delivery", "station-food", "train-food"]
    else:
        names += ["food-map"]
    return names


def build_release(k: int, release: str, rng: np.random.Generator) -> dict:
    names = services_for(release)
    edges = set()
    for src, dsts in FLOWS.items():
        for dst in dsts:
            if src in names and dst in names:
                edges.add((src, dst))
    if "sso" in names:
        edges |= {("login", "sso"), ("register", "sso"), ("ui-dashboard", "login"), ("ui-dashboard", "register"),
                  ("admin-user", "sso"), ("preserve", "sso"), ("cancel", "sso")}
    else:
        edges |= {("auth", "user"), ("ui-dashboard", "auth"), ("ui-dashboard", "user"),
                  ("admin-user", "user"), ("preserve", "user"), ("cancel", "user")}
    if "food-map" in names:
        edges |= {("food", "food-map")}
    else:
        edges |= {("ui-dashboard", "food-delivery"), ("food-delivery", "station-food"),
                  ("food", "train-food"), ("food", "station-food"), ("preserve", "food")}
        edges.discard(("preserve", "food"))
        edges |= {("preserve", "food-delivery")}

    # release-specific churn: drop a few flows, add a few; v0.0.4 is the busiest
    edges = sorted(edges)
    drop = rng.choice(len(edges), size=3 + k % 3, replace=False)
    edges = {e for i, e in enumerate(edges) if i not in set(drop.tolist())}
    extra = 12 if release == "v0.0.4" else 3
    pool = [n for n in names if n != "ui-dashboard"]
    while extra:
        a, b = rng.choice(pool, size=2, replace=False)
        if (a, b) not in edges and (b, a) not in edges:
            edges.add((str(a), str(b)))
            extra -= 1

    nodes = [{"id": svc(n), "kind": "service"} for n in names]
    out = [(svc(a), svc(b)) for a, b in sorted(edges)]
    # a per-service database (removed by preprocessing) and a shared one (kept)
    nodes += [{"id": "ts-order-mongo", "kind": "database"}, {"id": "mysql", "kind": "database"}]
    out += [(svc("order"), "ts-order-mongo"), (svc("config"), "mysql"), (svc("station"), "mysql"), (svc("price"), "mysql")]
    if release in ("v0.0.3", "v0.1.0"):
        # a detached pair that the largest-component filter removes
        nodes += [{"id": "ts-ticket-office-service", "kind": "service"}, {"id": "mongo-ticket-office", "kind": "database"}]
        out += [("ts-ticket-office-service", "mongo-ticket-office")]
    return {
        "release": release,
        "nodes": sorted(nodes, key=lambda n: n["id"]),
        "edges": [{"source": a, "target": b} for a, b in sorted(set(out))],
    }


# (tool, metric, category, kind, generator family)
METRICS = [
    ("understand", "CountLineCode", "size", "count", "central"),
    ("understand", "CountDeclClass", "size", "count", "central"),
    ("understand", "CountDeclMethod", "size", "count", "central"),
    ("understand", "CountDeclMethodPrivate", "size", "count", "central"),
    ("understand", "CountStmtExe", "size", "count", "noise"),
    ("understand", "RatioCommentToCode", "size", "ratio", "gauss"),
    ("jasome", "TLOC", "size", "count", "noise"),
    ("jasome", "RPPM", "size", "ratio", "central"),
    ("jasome", "SIX", "complexity", "ratio", "anti"),
    ("jasome", "NORM", "complexity", "count", "noise"),
    ("jasome", "DIT", "complexity", "count", "gauss"),
    ("sonarqube", "cognitive_complexity", "complexity", "count", "central"),
    ("sonarqube", "complexity", "complexity", "count", "central"),
    ("sonarqube", "code_smells", "quality", "count", "noise"),
    ("sonarqube", "bugs", "quality", "count", "noise"),
    ("sonarqube", "duplicated_lines_density", "quality", "ratio", "gauss"),
]


def degree_of(doc: dict) -> dict[str, int]:
    deg = {n["id"]: 0 for n in doc["nodes"]}
    for e in doc["edges"]:
        deg[e["source"]] += 1
        deg[e["target"]] += 1
    return deg


def write(target: Path) -> None:
    rng = np.random.default_rng(20240521)
    snaps = [build_release(k, r, rng) for k, r in enumerate(RELEASES)]
    (target / "snapshots").mkdir(parents=True, exist_ok=True)
    for doc in snaps:
        (target / "snapshots" / f"{doc['release']}.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    manifest = {"snapshots": [f"snapshots/{r}.json" for r in RELEASES]}
    (target / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    descriptors = {"metrics": [
        {"name": m, "source": tool, "category": cat, "kind": kind} for tool, m, cat, kind, _ in METRICS
    ]}
    (target / "descriptors.json").write_text(json.dumps(descriptors, indent=2) + "\n", encoding="utf-8")

    packages_per: dict[str, int] = {}
    for doc in snaps:
        release = doc["release"]
        deg = degree_of(doc)
        services = [n["id"] for n in doc["nodes"] if n["kind"] == "service"]
        lines = []
        pkgs: dict[str, list[str]] = {}
        for s in services:
            count = packages_per.setdefault(s, 1 + int(rng.integers(0, 3)))
            short = s.removeprefix("ts-").removesuffix("-service").replace("-", "")
            pkgs[s] = [f"com.trainticket.{short}" + ("" if j == 0 else f".sub{j}") for j in range(count)]
            lines += [f"{p}={s}" for p in pkgs[s]]
        (target / "mapping").mkdir(parents=True, exist_ok=True)
        (target / "mapping" / f"{release}.map").write_text(
            f"# package=service for {release}\n" + "\n".join(lines) + "\n", encoding="utf-8"
        )
        for tool in ("understand", "jasome", "sonarqube"):
            metrics = [m for m in METRICS if m[0] == tool]
            rows = ["package," + ",".join(m[1] for m in metrics)]
            for s in services:
                scale = 1.0 + deg[s]
                for p in pkgs[s]:
                    cells = []
                    for _, name, _, kind, family in metrics:
                        if rng.random() < 0.02:
                            cells.append("")  # tool did not report this metric
                            continue
                        if family == "central":
                            v = scale ** 1.5 * rng.lognormal(3.0, 0.3)
                        elif family == "anti":
                            v = rng.lognormal(0.0, 0.3) / scale
                        elif family == "gauss":
                            v = abs(rng.normal(20.0, 3.0))
                        else:
                            v = rng.lognormal(3.0, 1.2)
                        if kind == "ratio":
                            v = v / (100.0 + v)
                        cells.append(f"{round(v) if kind == 'count' else round(v, 6)}")
                    rows.append(p + "," + ",".join(cells))
            out = target / "metrics" / release
            out.mkdir(parents=True, exist_ok=True)
            (out / f"{tool}.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")

    (target / "analyze.yaml").write_text(
        "manifest: manifest.json\nmetrics-dir: metrics\nmapping-dir: mapping\n"
        "descriptors: descriptors.json\nalgorithms: [taylor, yin, liu]\neps: 0.5\n",
        encoding="utf-8",
    )


if __name__ == "__main__":
    default = Path(__file__).resolve().parents[1] / "src" / "tempcent" / "data" / "synthetic"
    write(Path(sys.argv[1]) if len(sys.argv) > 1 else default)
