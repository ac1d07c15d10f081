"""Time-averaged centrality, first-order-mover scores and CCP ranks.

Both scores come from the expansion of conditional centrality in the
strong-coupling regime of a uniformly coupled supra matrix::

    Z[i, t](eps) = tac[i] + eps * beta[i, t] + O(eps**2)

``tac`` is the limit and the first-order mover score of node ``i`` is the
Euclidean norm of its trajectory ``beta[i, :]``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import IntEnum
from typing import Literal, Sequence

import numpy as np
import scipy.linalg

from .network import TemporalNetwork, prefix_network
from .supra import (
    CouplingStrategy,
    CouplingVariant,
    LayerCentralityStrategy,
    LayerVariant,
    assemble_supra_matrix,
    dominant_eigenpair_dense,
    layer_centrality_matrix,
    tensor_from_vector,
)

Method = Literal["analytic", "numerical"]

TAYLOR = LayerCentralityStrategy(LayerVariant.ADJACENCY, True)
ZERO_FOM_TOL = 1e-12


def _taylor(symmetrize: bool) -> LayerCentralityStrategy:
    return LayerCentralityStrategy(LayerVariant.ADJACENCY, symmetrize)


def _perron(x: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Leading eigenvalue with right (unit-sum) and left eigenvectors."""
    vals, left, right = scipy.linalg.eig(x, left=True, right=True)
    k = int(np.argmax(vals.real))
    r = right[:, k].real
    l = left[:, k].real
    r = r * np.sign(r.sum()) if r.sum() != 0 else r
    l = l * np.sign(l.sum()) if l.sum() != 0 else l
    r = np.clip(r, 0.0, None)
    return float(vals[k].real), r / r.sum(), l


def _chain(T: int) -> tuple[float, np.ndarray, np.ndarray]:
    """Perron pair of the undirected path on ``T`` layers and the reduced resolvent."""
    a = np.eye(T, k=1) + np.eye(T, k=-1)
    vals, vecs = np.linalg.eigh(a)
    lam = vals[-1]
    u = np.abs(vecs[:, -1])
    resolvent = sum(
        np.outer(vecs[:, k], vecs[:, k]) / (vals[k] - lam) for k in range(T - 1)
    )
    return lam, u, np.asarray(resolvent)


def strong_coupling_expansion(
    tn: TemporalNetwork, lcs: LayerCentralityStrategy = TAYLOR
) -> tuple[np.ndarray, np.ndarray]:
    """Zeroth- and first-order terms ``(tac, beta)`` by degenerate perturbation theory.

    Requires ``T >= 2``. ``beta`` has shape ``(N, T)``.
    """
    T = tn.n_layers
    if T < 2:
        raise ValueError("expansion needs at least two layers")
    C = np.array([layer_centrality_matrix(tn, t, lcs) for t in range(T)])
    _, u, R = _chain(T)

    X = np.einsum("t,tij->ij", u**2, C)
    mu1, alpha, left = _perron(X)

    # first-order correction orthogonal to the degenerate space
    rhs = u[:, None] * (mu1 * alpha[None, :] - C @ alpha)
    v1 = R @ rhs
    b = np.einsum("t,tij,tj->i", u, C, v1)
    denom = left @ alpha
    mu2 = (left @ b) / denom if denom != 0 else 0.0
    gamma = np.linalg.lstsq(X - mu1 * np.eye(len(alpha)), mu2 * alpha - b, rcond=None)[0]

    y = v1 / u[:, None] + gamma[None, :]
    beta = y - np.outer(y.sum(axis=1), alpha)
    return alpha, beta.T


def conditional_at(
    tn: TemporalNetwork, epsilon: float, lcs: LayerCentralityStrategy = TAYLOR
) -> np.ndarray:
    """Conditional centrality ``Z`` with uniform coupling, solved directly."""
    supra = assemble_supra_matrix(tn, epsilon, lcs, CouplingStrategy(CouplingVariant.UNIFORM))
    lam, v = dominant_eigenpair_dense(supra.matrix)
    return np.array(tensor_from_vector(v, lam, tn, "taylor", epsilon).Z)


def numerical_limit(
    tn: TemporalNetwork,
    lcs: LayerCentralityStrategy = TAYLOR,
    h: float | None = None,
    levels: int = 5,
) -> tuple[np.ndarray, np.ndarray]:
    """``(tac, beta)`` by polynomial (Richardson) extrapolation of ``Z(eps)`` to ``eps = 0``.

    ``Z`` is sampled at ``h, h/2, ..., h/2**(levels-1)``; the default ``h``
    keeps the samples well inside the radius where the expansion converges.
    """
    T = tn.n_layers
    if h is None:
        norm = max(
            (np.linalg.norm(layer_centrality_matrix(tn, t, lcs), 2) for t in range(T)),
            default=1.0,
        )
        gap = 2 * np.cos(np.pi / (T + 1)) - 2 * np.cos(2 * np.pi / (T + 1)) if T > 1 else 1.0
        h = 0.02 * gap / max(norm, 1.0)
    eps = h / 2.0 ** np.arange(levels)
    samples = np.array([conditional_at(tn, e, lcs) for e in eps])  # (levels, N, T)
    vander = np.vander(eps, levels, increasing=True)
    coef = np.linalg.solve(vander, samples.reshape(levels, -1))
    shape = samples.shape[1:]
    Z0 = coef[0].reshape(shape)
    beta = coef[1].reshape(shape)
    return Z0.mean(axis=1), beta


def _static_centrality(tn: TemporalNetwork, lcs: LayerCentralityStrategy) -> np.ndarray:
    return _perron(layer_centrality_matrix(tn, 0, lcs))[1]


def time_averaged_centrality(
    tn: TemporalNetwork, *, symmetrize: bool = True, method: Method = "analytic"
) -> np.ndarray:
    lcs = _taylor(symmetrize)
    if tn.n_layers == 1:
        return _static_centrality(tn, lcs)
    if method == "analytic":
        return strong_coupling_expansion(tn, lcs)[0]
    return numerical_limit(tn, lcs)[0]


def first_order_mover(
    tn: TemporalNetwork, *, symmetrize: bool = True, method: Method = "analytic"
) -> tuple[np.ndarray, bool]:
    """Per-node mover score and whether it is defined (it is not for one layer)."""
    if tn.n_layers == 1:
        return np.zeros(tn.n_nodes), False
    lcs = _taylor(symmetrize)
    if method == "analytic":
        beta = strong_coupling_expansion(tn, lcs)[1]
    else:
        beta = numerical_limit(tn, lcs)[1]
    return np.linalg.norm(beta, axis=1), True


def normalize_fom(fom: np.ndarray) -> tuple[np.ndarray, bool]:
    """Scale to unit Euclidean norm.

    A vector whose norm is at roundoff level (identical layers) is returned as
    zeros and flagged, so noise is not blown up into ranks.
    """
    fom = np.asarray(fom, dtype=float)
    norm = np.linalg.norm(fom)
    if norm <= ZERO_FOM_TOL:
        return np.zeros_like(fom), True
    return fom / norm, False


@dataclass(frozen=True, eq=False)
class MoverScores:
    registry: tuple[str, ...]
    tac: np.ndarray
    fom: np.ndarray
    norm_fom: np.ndarray
    defined: bool
    zero_fom: bool


def mover_scores(tn: TemporalNetwork, *, symmetrize: bool = True, method: Method = "analytic") -> MoverScores:
    tac = time_averaged_centrality(tn, symmetrize=symmetrize, method=method)
    fom, defined = first_order_mover(tn, symmetrize=symmetrize, method=method)
    norm, zero = normalize_fom(fom)
    return MoverScores(tn.registry, tac, fom, norm, defined, zero and defined)


# -- CCP ranks -------------------------------------------------------------


class CcpRank(IntEnum):
    LOW = 1
    MEDIUM_LOW = 2
    MEDIUM_HIGH = 3
    HIGH = 4

    @property
    def label(self) -> str:
        return self.name.replace("_", "-")


def quartile_thresholds(values: Sequence[float]) -> tuple[float, float, float]:
    values = np.asarray(values, dtype=float)
    if values.size < 4:
        raise ValueError(f"need at least 4 values for quartiles, got {values.size}")
    q = np.quantile(values, [0.25, 0.5, 0.75], method="linear")
    return float(q[0]), float(q[1]), float(q[2])


def assign_ccp(value: float, thresholds: tuple[float, float, float]) -> CcpRank:
    q1, q2, q3 = thresholds
    if not q1 <= q2 <= q3:
        raise ValueError(f"thresholds not ordered: {thresholds}")
    if value <= q1:
        return CcpRank.LOW
    if value <= q2:
        return CcpRank.MEDIUM_LOW
    if value <= q3:
        return CcpRank.MEDIUM_HIGH
    return CcpRank.HIGH


@dataclass(frozen=True)
class CcpEntry:
    release: str
    defined: bool
    norm_fom: dict[str, float]
    ranks: dict[str, CcpRank]
    thresholds: tuple[float, float, float] | None
    nodes: tuple[str, ...]


@dataclass(frozen=True)
class CcpTimeline:
    entries: tuple[CcpEntry, ...]

    @property
    def releases(self) -> tuple[str, ...]:
        return tuple(e.release for e in self.entries)

    def __getitem__(self, release: str) -> CcpEntry:
        for e in self.entries:
            if e.release == release:
                return e
        raise KeyError(release)

    def rows(self) -> list[tuple[str, str, str, str, str]]:
        """Records for the ``release,node,norm_fom,ccp_rank,defined`` table."""
        out = []
        for e in self.entries:
            for node in sorted(e.nodes):
                if e.defined:
                    out.append((e.release, node, repr(e.norm_fom[node]), e.ranks[node].label, "true"))
                else:
                    out.append((e.release, node, "", "", "false"))
        return out


CCP_HEADER = ("release", "node", "norm_fom", "ccp_rank", "defined")


def ccp_timeline(
    tn: TemporalNetwork,
    *,
    symmetrize: bool = True,
    method: Method = "analytic",
    thresholds: Literal["per-release", "final"] = "per-release",
    workers: int = 1,
) -> CcpTimeline:
    """Mover scores and CCP ranks recomputed on every accumulated prefix."""

    def one(k: int) -> tuple[TemporalNetwork, MoverScores]:
        sub = prefix_network(tn, k)
        return sub, mover_scores(sub, symmetrize=symmetrize, method=method)

    ks = range(1, tn.n_layers + 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, ks))
    else:
        results = [one(k) for k in ks]

    final_q = None
    if thresholds == "final" and results[-1][1].defined:
        final_q = quartile_thresholds(results[-1][1].norm_fom)

    entries = []
    for sub, scores in results:
        release = sub.releases[-1]
        if not scores.defined:
            entries.append(CcpEntry(release, False, {}, {}, None, sub.registry))
            continue
        q = final_q or quartile_thresholds(scores.norm_fom)
        norm = {n: float(v) for n, v in zip(sub.registry, scores.norm_fom)}
        ranks = {n: assign_ccp(v, q) for n, v in norm.items()}
        entries.append(CcpEntry(release, True, norm, ranks, q, sub.registry))
    return CcpTimeline(tuple(entries))
