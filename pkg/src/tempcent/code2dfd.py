"""Adapter from Code2DFD dataflow-diagram exports to :class:`Snapshot`.

Code2DFD writes a JSON document describing detected microservices, external
components and information flows. Field names vary between tool versions, so
the lookup keys are configurable through :class:`Code2DFDFields`.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

from .network import NodeKind, ServiceNode, Snapshot, SnapshotError

DEFAULT_DATABASE_NAMES = ("mysql", "mongo", "redis", "postgres", "mariadb", "memcached")


@dataclass(frozen=True)
class Code2DFDFields:
    services: str = "microservices"
    externals: str = "external_components"
    flows: str = "information_flows"
    name: str = "name"
    stereotypes: str = "stereotype_instances"
    sender: str = "sender"
    receiver: str = "receiver"
    database_names: tuple[str, ...] = DEFAULT_DATABASE_NAMES
    database_stereotypes: tuple[str, ...] = field(default=("database",))


def _entries(section: Any) -> list[Mapping[str, Any]]:
    # Code2DFD emits either a list or an id-keyed dict of entries
    if isinstance(section, Mapping):
        return [section[k] for k in sorted(section, key=str)]
    if isinstance(section, list):
        return section
    raise SnapshotError("unrecognized schema: section is neither list nor object")


def _is_database(name: str, stereotypes: Iterable[str], fields: Code2DFDFields) -> bool:
    lowered = name.lower()
    if any(s in fields.database_stereotypes for s in stereotypes):
        return True
    return any(re.search(rf"(^|[-_.]){re.escape(db)}", lowered) for db in fields.database_names)


def snapshot_from_code2dfd(doc: Mapping[str, Any], release: str, fields: Code2DFDFields | None = None) -> Snapshot:
    fields = fields or Code2DFDFields()
    if not isinstance(doc, Mapping) or fields.services not in doc or fields.flows not in doc:
        raise SnapshotError("unrecognized schema")

    kinds: dict[str, NodeKind] = {}
    for section in (fields.services, fields.externals):
        for entry in _entries(doc.get(section, [])):
            name = entry.get(fields.name)
            if not name:
                raise SnapshotError("unrecognized schema: entry without name")
            stereo = entry.get(fields.stereotypes) or []
            is_db = _is_database(name, stereo, fields)
            if section == fields.externals and not is_db:
                continue  # users, gateways outside the repo, mail servers
            kinds[name] = NodeKind.DATABASE if is_db else NodeKind.SERVICE
    if not kinds:
        raise SnapshotError("empty diagram")

    edges = set()
    for flow in _entries(doc[fields.flows]):
        src, dst = flow.get(fields.sender), flow.get(fields.receiver)
        if src in kinds and dst in kinds and src != dst:
            edges.add((src, dst))
    nodes = frozenset(ServiceNode(n, k) for n, k in kinds.items())
    return Snapshot(release, nodes, frozenset(edges))


def import_code2dfd(directory: str | Path, release: str | None = None, fields: Code2DFDFields | None = None) -> Snapshot:
    """Load the first JSON export in ``directory`` that carries the expected sections."""
    directory = Path(directory)
    fields = fields or Code2DFDFields()
    candidates = sorted(directory.glob("*.json"))
    if not candidates:
        raise SnapshotError(f"unrecognized schema: no JSON export in {directory}")
    for path in candidates:
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError:
            continue
        if isinstance(doc, Mapping) and fields.services in doc and fields.flows in doc:
            return snapshot_from_code2dfd(doc, release or directory.name, fields)
    raise SnapshotError(f"unrecognized schema in {directory}")
