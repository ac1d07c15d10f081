"""Snapshots of a service dependency graph and their alignment into a temporal network."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import networkx as nx
import numpy as np


class SnapshotError(ValueError):
    """Raised for malformed or inconsistent snapshot documents."""


class NodeKind(str, Enum):
    SERVICE = "service"
    DATABASE = "database"


@dataclass(frozen=True, order=True)
class ServiceNode:
    id: str
    kind: NodeKind = NodeKind.SERVICE

    def __post_init__(self) -> None:
        if not isinstance(self.id, str) or not self.id:
            raise SnapshotError("node id must be a non-empty string")
        object.__setattr__(self, "kind", NodeKind(self.kind))


@dataclass(frozen=True)
class Snapshot:
    """One release of the architecture: services/databases and directed calls."""

    release: str
    nodes: frozenset[ServiceNode]
    edges: frozenset[tuple[str, str]] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", frozenset(self.nodes))
        object.__setattr__(self, "edges", frozenset(self.edges))
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise SnapshotError(f"duplicate node id in release {self.release!r}")
        known = set(ids)
        for src, dst in self.edges:
            if src == dst:
                raise SnapshotError(f"self-loop on {src!r} in release {self.release!r}")
            for end in (src, dst):
                if end not in known:
                    raise SnapshotError(f"dangling endpoint {end!r} in release {self.release!r}")

    @property
    def node_ids(self) -> list[str]:
        return sorted(n.id for n in self.nodes)

    @property
    def kinds(self) -> dict[str, NodeKind]:
        return {n.id: n.kind for n in self.nodes}

    def induced(self, keep: Iterable[str]) -> Snapshot:
        keep = set(keep)
        return Snapshot(
            self.release,
            frozenset(n for n in self.nodes if n.id in keep),
            frozenset(e for e in self.edges if e[0] in keep and e[1] in keep),
        )

    def to_document(self) -> dict[str, Any]:
        """Neutral snapshot document with deterministic ordering."""
        return {
            "release": self.release,
            "nodes": [{"id": n.id, "kind": n.kind.value} for n in sorted(self.nodes)],
            "edges": [{"source": s, "target": t} for s, t in sorted(self.edges)],
        }

    def to_digraph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.node_ids)
        g.add_edges_from(sorted(self.edges))
        return g


def parse_snapshot(document: Mapping[str, Any] | str) -> Snapshot:
    """Validate a snapshot document (mapping or JSON text).

    Duplicate edges collapse silently; self-loops and undeclared endpoints are errors.
    """
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SnapshotError(f"malformed document: {exc}") from exc
    if not isinstance(document, Mapping):
        raise SnapshotError("malformed document: expected an object")
    try:
        release = document["release"]
        raw_nodes = document["nodes"]
        raw_edges = document.get("edges", [])
    except (KeyError, TypeError) as exc:
        raise SnapshotError(f"malformed document: missing field {exc}") from exc
    if not isinstance(release, str) or not release:
        raise SnapshotError("malformed document: release must be a non-empty string")
    if not isinstance(raw_nodes, list) or not isinstance(raw_edges, list):
        raise SnapshotError("malformed document: nodes and edges must be lists")
    if not raw_nodes:
        raise SnapshotError(f"empty node set in release {release!r}")
    try:
        nodes = [ServiceNode(n["id"], NodeKind(n.get("kind", "service"))) for n in raw_nodes]
        edges = {(e["source"], e["target"]) for e in raw_edges}
    except (KeyError, TypeError, ValueError) as exc:
        raise SnapshotError(f"malformed document: {exc}") from exc
    return Snapshot(release, frozenset(nodes), frozenset(edges))


def load_snapshot(path: str | Path) -> Snapshot:
    text = Path(path).read_text(encoding="utf-8")
    return parse_snapshot(_load_structured(text, Path(path).suffix))


def dump_snapshot(snapshot: Snapshot) -> str:
    return json.dumps(snapshot.to_document(), indent=2, sort_keys=True) + "\n"


def load_manifest(path: str | Path) -> list[Snapshot]:
    """Read a manifest listing snapshot files (relative to the manifest) in chronological order."""
    path = Path(path)
    doc = _load_structured(path.read_text(encoding="utf-8"), path.suffix)
    entries = doc.get("snapshots") if isinstance(doc, Mapping) else doc
    if not isinstance(entries, list) or not entries:
        raise SnapshotError(f"manifest {path} lists no snapshots")
    snapshots = []
    for entry in entries:
        rel = entry if isinstance(entry, str) else entry.get("file")
        if not rel:
            raise SnapshotError(f"manifest {path}: entry without file")
        snapshots.append(load_snapshot(path.parent / rel))
    return snapshots


def _load_structured(text: str, suffix: str) -> Any:
    if suffix.lower() in (".yaml", ".yml"):
        import yaml

        return yaml.safe_load(text)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SnapshotError(f"malformed document: {exc}") from exc


# -- preprocessing ---------------------------------------------------------


def largest_weakly_connected_component(s: Snapshot) -> Snapshot:
    # ties broken by the component holding the lexicographically smallest id
    comps = [sorted(c) for c in nx.weakly_connected_components(s.to_digraph())]
    best = min(comps, key=lambda c: (-len(c), c[0]))
    return s.induced(best)


def filter_single_service_databases(s: Snapshot) -> Snapshot:
    """Drop databases whose only neighbour (either direction) is one service."""
    kinds = s.kinds
    neighbours: dict[str, set[str]] = {n: set() for n in kinds}
    for a, b in s.edges:
        neighbours[a].add(b)
        neighbours[b].add(a)
    drop = {
        n
        for n, kind in kinds.items()
        if kind is NodeKind.DATABASE
        and len(neighbours[n]) == 1
        and kinds[next(iter(neighbours[n]))] is NodeKind.SERVICE
    }
    if not drop:
        return s
    return s.induced(set(kinds) - drop)


def preprocess(s: Snapshot) -> Snapshot:
    """LWCC, database filter, then LWCC again (filtering may disconnect)."""
    s = largest_weakly_connected_component(s)
    s = filter_single_service_databases(s)
    return largest_weakly_connected_component(s)


def is_weakly_connected(s: Snapshot) -> bool:
    return nx.is_weakly_connected(s.to_digraph())


# -- temporal network ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TemporalNetwork:
    """Snapshots aligned on a shared node registry.

    ``adjacency[t, i, j] == 1`` iff edge ``registry[i] -> registry[j]`` exists in
    layer ``t``; absent nodes have zero rows and columns in that layer.
    """

    layers: tuple[Snapshot, ...]
    registry: tuple[str, ...]
    kinds: tuple[NodeKind, ...]
    presence: np.ndarray  # (N, T) bool
    adjacency: np.ndarray  # (T, N, N) float 0/1

    @property
    def n_nodes(self) -> int:
        return len(self.registry)

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def releases(self) -> tuple[str, ...]:
        return tuple(s.release for s in self.layers)

    def index(self, node: str) -> int:
        return self.registry.index(node)

    def present(self, t: int) -> list[str]:
        return [n for i, n in enumerate(self.registry) if self.presence[i, t]]


def build_temporal_network(snapshots: Sequence[Snapshot]) -> TemporalNetwork:
    if not snapshots:
        raise SnapshotError("at least one snapshot is required")
    releases = [s.release for s in snapshots]
    if len(set(releases)) != len(releases):
        raise SnapshotError(f"duplicate release tags: {releases}")

    first_seen: dict[str, int] = {}
    kind_of: dict[str, NodeKind] = {}
    for t, snap in enumerate(snapshots):
        for node in snap.nodes:
            first_seen.setdefault(node.id, t)
            kind_of.setdefault(node.id, node.kind)
    registry = tuple(sorted(first_seen, key=lambda n: (first_seen[n], n)))
    pos = {n: i for i, n in enumerate(registry)}

    n, T = len(registry), len(snapshots)
    presence = np.zeros((n, T), dtype=bool)
    adjacency = np.zeros((T, n, n))
    for t, snap in enumerate(snapshots):
        for node in snap.nodes:
            presence[pos[node.id], t] = True
        for src, dst in snap.edges:
            adjacency[t, pos[src], pos[dst]] = 1.0
    presence.setflags(write=False)
    adjacency.setflags(write=False)
    return TemporalNetwork(
        tuple(snapshots), registry, tuple(kind_of[r] for r in registry), presence, adjacency
    )


def prefix_network(tn: TemporalNetwork, k: int) -> TemporalNetwork:
    """The network accumulated up to and including the ``k``-th release."""
    if not 1 <= k <= tn.n_layers:
        raise ValueError(f"prefix length {k} outside 1..{tn.n_layers}")
    if k == tn.n_layers:
        return tn
    return build_temporal_network(tn.layers[:k])
