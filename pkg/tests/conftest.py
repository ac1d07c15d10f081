from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from tempcent.network import NodeKind, ServiceNode, Snapshot, build_temporal_network

FIXTURE = Path(__file__).resolve().parents[1] / "src" / "tempcent" / "data" / "synthetic"


def snap(release: str, edges, nodes=(), kinds=None) -> Snapshot:
    kinds = kinds or {}
    ids = set(nodes) | {x for e in edges for x in e}
    return Snapshot(
        release,
        frozenset(ServiceNode(i, kinds.get(i, NodeKind.SERVICE)) for i in ids),
        frozenset(edges),
    )


def random_connected_layer(rng: np.random.Generator, ids: list[str], extra: float = 0.15) -> set[tuple[str, str]]:
    """Random spanning tree plus extra random directed edges."""
    n = len(ids)
    order = rng.permutation(n)
    edges = set()
    for k in range(1, n):
        i, j = ids[order[k]], ids[order[rng.integers(0, k)]]
        edges.add((i, j) if rng.random() < 0.5 else (j, i))
    for i in range(n):
        for j in range(n):
            if i != j and rng.random() < extra:
                edges.add((ids[i], ids[j]))
    return edges


def random_temporal_network(rng: np.random.Generator, n: int, T: int, extra: float = 0.15):
    ids = [f"n{i:02d}" for i in range(n)]
    return build_temporal_network(
        [snap(f"r{t}", random_connected_layer(rng, ids, extra), ids) for t in range(T)]
    )


@pytest.fixture
def fixture_dir() -> Path:
    return FIXTURE


def pytest_terminal_summary(terminalreporter):
    from .test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
