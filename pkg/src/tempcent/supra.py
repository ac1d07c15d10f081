"""Supra-centrality matrices and joint/conditional/marginal temporal centralities.

The supra matrix of a network with ``N`` nodes and ``T`` layers is ``NT x NT``
and indexed layer-major: row ``t * N + i`` is node ``i`` in layer ``t``. Layer
``t`` contributes its centrality matrix ``C(t)`` as a diagonal block; adjacent
layers are coupled node-to-itself with weight ``omega[i, t] / epsilon``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from typing import Literal

import numpy as np
import scipy.linalg
import scipy.sparse as sps

from .network import TemporalNetwork


class ConvergenceError(ArithmeticError):
    """Power iteration did not settle within the iteration budget."""


class LayerVariant(str, Enum):
    ADJACENCY = "adjacency"
    DEGREE_AUGMENTED = "degree_augmented"


class CouplingVariant(str, Enum):
    UNIFORM = "uniform"
    SIMILARITY = "similarity"


@dataclass(frozen=True)
class LayerCentralityStrategy:
    variant: LayerVariant = LayerVariant.ADJACENCY
    symmetrize: bool = True


@dataclass(frozen=True)
class CouplingStrategy:
    variant: CouplingVariant = CouplingVariant.UNIFORM


ALGORITHMS: dict[str, tuple[LayerVariant, CouplingVariant]] = {
    "taylor": (LayerVariant.ADJACENCY, CouplingVariant.UNIFORM),
    "yin": (LayerVariant.ADJACENCY, CouplingVariant.SIMILARITY),
    "liu": (LayerVariant.DEGREE_AUGMENTED, CouplingVariant.SIMILARITY),
}

DEFAULT_EPSILON = 0.5
DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 100_000


def strategies_for(algorithm: str, symmetrize: bool = True) -> tuple[LayerCentralityStrategy, CouplingStrategy]:
    try:
        layer, coupling = ALGORITHMS[algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {sorted(ALGORITHMS)}") from None
    return LayerCentralityStrategy(layer, symmetrize), CouplingStrategy(coupling)


def _undirected(a: np.ndarray) -> np.ndarray:
    return np.minimum(a + a.T, 1.0)


def layer_centrality_matrix(tn: TemporalNetwork, t: int, strategy: LayerCentralityStrategy) -> np.ndarray:
    """Centrality matrix ``C(t)`` of the ``t``-th layer (0-based)."""
    if not 0 <= t < tn.n_layers:
        raise IndexError(f"layer {t} outside 0..{tn.n_layers - 1}")
    a = np.array(tn.adjacency[t])
    c = _undirected(a) if strategy.symmetrize else a
    if strategy.variant is LayerVariant.DEGREE_AUGMENTED:
        c = c + np.diag(a.sum(axis=0) + a.sum(axis=1))
    return c


def coupling_weights(tn: TemporalNetwork, strategy: CouplingStrategy) -> np.ndarray:
    """Per-node weights ``omega[i, t]`` coupling layer ``t`` to ``t + 1``; shape ``(N, T - 1)``."""
    n, T = tn.n_nodes, tn.n_layers
    if strategy.variant is CouplingVariant.UNIFORM or T < 2:
        return np.ones((n, max(T - 1, 0)))
    und = np.array([_undirected(np.asarray(a)) > 0 for a in tn.adjacency])
    inter = (und[:-1] & und[1:]).sum(axis=2)
    union = (und[:-1] | und[1:]).sum(axis=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        omega = np.where(union == 0, 1.0, inter / np.where(union == 0, 1, union))
    return omega.T.astype(float)


@dataclass(frozen=True)
class SupraMatrix:
    matrix: np.ndarray
    epsilon: float
    n_nodes: int
    n_layers: int

    def block(self, t: int, s: int) -> np.ndarray:
        n = self.n_nodes
        return self.matrix[t * n:(t + 1) * n, s * n:(s + 1) * n]


def assemble_supra_matrix(
    tn: TemporalNetwork,
    epsilon: float,
    lcs: LayerCentralityStrategy,
    cs: CouplingStrategy,
) -> SupraMatrix:
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    n, T = tn.n_nodes, tn.n_layers
    m = np.zeros((n * T, n * T))
    for t in range(T):
        m[t * n:(t + 1) * n, t * n:(t + 1) * n] = layer_centrality_matrix(tn, t, lcs)
    omega = coupling_weights(tn, cs)
    idx = np.arange(n)
    for t in range(T - 1):
        w = omega[:, t] / epsilon
        m[t * n + idx, (t + 1) * n + idx] = w
        m[(t + 1) * n + idx, t * n + idx] = w
    return SupraMatrix(m, float(epsilon), n, T)


def dominant_eigenpair(
    m: np.ndarray | sps.spmatrix,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> tuple[float, np.ndarray]:
    """Perron eigenpair of a nonnegative matrix by power iteration on ``M + I``.

    The unit shift keeps iterates from oscillating when the spectrum is
    symmetric about zero (bipartite layers). Returns ``v >= 0`` with ``sum(v) == 1``.
    """
    size = m.shape[0]
    if size == 0 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square and non-empty")
    if (sps.issparse(m) and m.nnz == 0) or (not sps.issparse(m) and not np.any(m)):
        raise ValueError("all-zero matrix has no dominant eigenvector")
    op = m.tocsr() if sps.issparse(m) else np.asarray(m, dtype=float)

    v = np.full(size, 1.0 / size)
    for _ in range(max_iter):
        w = op @ v + v
        w /= w.sum()
        if np.max(np.abs(w - v)) < tol:
            v = w
            break
        v = w
    else:
        raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations")
    lam = float(v @ (op @ v) / (v @ v))
    return lam, v


def dominant_eigenpair_dense(m: np.ndarray) -> tuple[float, np.ndarray]:
    """Direct (LAPACK) Perron eigenpair; used where power iteration is too slow.

    In the strong-coupling regime the leading eigenvalue gap shrinks like
    ``epsilon`` relative to the spectral radius, so power iteration needs
    ``O(1 / epsilon)`` steps.
    """
    m = np.asarray(m, dtype=float)
    if not np.any(m):
        raise ValueError("all-zero matrix has no dominant eigenvector")
    if np.array_equal(m, m.T):
        vals, vecs = scipy.linalg.eigh(m)
        k = int(np.argmax(vals))
        lam, v = float(vals[k]), vecs[:, k]
    else:
        vals, vecs = scipy.linalg.eig(m)
        k = int(np.argmax(vals.real))
        lam, v = float(vals[k].real), vecs[:, k].real
    v = v * np.sign(v.sum()) if v.sum() != 0 else np.abs(v)
    v = np.clip(v, 0.0, None)
    return lam, v / v.sum()


@dataclass(frozen=True, eq=False)
class CentralityTensor:
    """Joint centralities ``W`` (node x layer) and their marginals.

    ``Z[i, t]`` is 0 for layers with zero total centrality; those layers are
    listed in ``zero_layers``.
    """

    algorithm: str
    epsilon: float
    lam: float
    W: np.ndarray
    mlc: np.ndarray
    mnc: np.ndarray
    Z: np.ndarray
    registry: tuple[str, ...]
    releases: tuple[str, ...]
    zero_layers: tuple[int, ...] = ()


def tensor_from_vector(
    v: np.ndarray, lam: float, tn: TemporalNetwork, algorithm: str, epsilon: float
) -> CentralityTensor:
    n, T = tn.n_nodes, tn.n_layers
    W = v.reshape(T, n).T / v.sum()
    mlc = W.sum(axis=0)
    mnc = W.sum(axis=1)
    zero = tuple(int(t) for t in np.flatnonzero(mlc <= 0))
    Z = np.divide(W, mlc, out=np.zeros_like(W), where=mlc > 0)
    for arr in (W, mlc, mnc, Z):
        arr.setflags(write=False)
    return CentralityTensor(algorithm, epsilon, lam, W, mlc, mnc, Z, tn.registry, tn.releases, zero)


def temporal_centrality(
    tn: TemporalNetwork,
    algorithm: str = "taylor",
    epsilon: float = DEFAULT_EPSILON,
    *,
    symmetrize: bool = True,
    solver: Literal["power", "dense"] = "power",
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> CentralityTensor:
    if tn.n_nodes == 0:
        raise ValueError("temporal network has no nodes")
    lcs, cs = strategies_for(algorithm, symmetrize)
    supra = assemble_supra_matrix(tn, epsilon, lcs, cs)
    if solver == "power":
        lam, v = dominant_eigenpair(supra.matrix, tol, max_iter)
    elif solver == "dense":
        lam, v = dominant_eigenpair_dense(supra.matrix)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    return tensor_from_vector(v, lam, tn, algorithm, epsilon)


# -- export ----------------------------------------------------------------

CENTRALITY_HEADER = ("node", "layer", "release", "algorithm", "metric", "value")


def fmt(value: float) -> str:
    return repr(float(value))


def centrality_export(ct: CentralityTensor) -> list[tuple[str, str, str, str, str, str]]:
    """Long-format records; ``layer`` is 1-based, blank for per-node rows."""
    rows = []
    for t, release in enumerate(ct.releases):
        rows.append(("", str(t + 1), release, ct.algorithm, "mlc", fmt(ct.mlc[t])))
    for i, node in enumerate(ct.registry):
        rows.append((node, "", "", ct.algorithm, "mnc", fmt(ct.mnc[i])))
        for t, release in enumerate(ct.releases):
            rows.append((node, str(t + 1), release, ct.algorithm, "conditional", fmt(ct.Z[i, t])))
            rows.append((node, str(t + 1), release, ct.algorithm, "joint", fmt(ct.W[i, t])))
    rows.sort(key=lambda r: (r[0], int(r[1]) if r[1] else 0, r[4]))
    return rows


def write_table(header: tuple[str, ...], rows: list[tuple], stream: io.TextIOBase | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text
