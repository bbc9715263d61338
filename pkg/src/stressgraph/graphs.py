"""Structural/functional/fused adjacency construction, renormalization, and graph quality metrics."""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import ElectrodeLayout, GraphConfig, Trial

ADJACENCY_KINDS = ("structural", "functional", "fused", "renormalized")


@dataclass
class Adjacency:
    """Dense symmetric N x N non-negative edge-weight matrix."""

    weights: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in ADJACENCY_KINDS:
            raise ValueError(f"unknown adjacency kind {self.kind!r}")
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {w.shape}")
        if not np.array_equal(w, w.T):
            raise ValueError("adjacency must be exactly symmetric")
        if np.any(w < 0):
            raise ValueError("adjacency weights must be non-negative")
        if self.kind != "renormalized" and np.any(np.diag(w) != 0):
            raise ValueError(f"{self.kind} adjacency must have a zero diagonal")
        self.weights = w

    @property
    def n_nodes(self) -> int:
        return self.weights.shape[0]


@dataclass
class GraphMetrics:
    algebraic_connectivity: float
    avg_clustering: float
    avg_shortest_path: float  # math.inf when the support is disconnected
    avg_degree: float

    def to_dict(self) -> dict:
        def enc(v: float):
            return None if math.isinf(v) else v

        return {
            "algebraic_connectivity": self.algebraic_connectivity,
            "avg_clustering": self.avg_clustering,
            "avg_shortest_path": enc(self.avg_shortest_path),
            "avg_degree": self.avg_degree,
        }


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson correlation coefficient; 0 if either vector has zero variance."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    if x.size < 2:
        raise ValueError("need at least 2 samples")
    xc = x - x.mean()
    yc = y - y.mean()
    denom_sq = float(xc @ xc) * float(yc @ yc)
    if denom_sq == 0.0:
        return 0.0
    return float(xc @ yc) / math.sqrt(denom_sq)


def pearson_matrix(signal: np.ndarray) -> np.ndarray:
    """All-pairs Pearson correlations of signal rows; zero-variance rows correlate 0 with everything."""
    sig = np.asarray(signal, dtype=float)
    centered = sig - sig.mean(axis=1, keepdims=True)
    cov = centered @ centered.T
    var = np.diag(cov).copy()
    denom = np.sqrt(np.outer(var, var))
    rho = np.zeros_like(cov)
    ok = denom > 0
    rho[ok] = cov[ok] / denom[ok]
    return rho


def structural_adjacency(layout: ElectrodeLayout, config: GraphConfig) -> Adjacency:
    """Inverse-distance weights on the symmetrized union of k-nearest-neighbor selections.

    Edge (i, j) carries weight 1 / (||p_i - p_j|| + epsilon) when j is among the
    k nearest neighbors of i or vice versa. Distance ties break toward the lower
    channel index so the construction is deterministic.
    """
    n = layout.n_channels
    if config.k >= n:
        raise ValueError(f"k={config.k} must be smaller than the channel count {n}")
    pos = layout.positions
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=2))
    weights = np.zeros((n, n), dtype=float)
    for i in range(n):
        order = sorted((dist[i, j], j) for j in range(n) if j != i)
        for _, j in order[: config.k]:
            w = 1.0 / (dist[i, j] + config.epsilon)
            weights[i, j] = w
            weights[j, i] = w
    return Adjacency(weights=weights, kind="structural")


def functional_adjacency(trial: Trial, config: GraphConfig) -> Adjacency:
    """Binary edges where inter-channel Pearson correlation strictly exceeds tau."""
    rho = pearson_matrix(trial.signal)
    weights = (rho > config.tau).astype(float)
    np.fill_diagonal(weights, 0.0)
    weights = np.minimum(weights, weights.T)  # defensively exact-symmetric
    return Adjacency(weights=weights, kind="functional")


def fuse_adjacency(a_struct: Adjacency, a_func: Adjacency) -> Adjacency:
    """Element-wise average of the structural and functional matrices."""
    if a_struct.kind != "structural" or a_func.kind != "functional":
        raise ValueError(f"expected (structural, functional), got ({a_struct.kind}, {a_func.kind})")
    if a_struct.n_nodes != a_func.n_nodes:
        raise ValueError(f"node count mismatch: {a_struct.n_nodes} vs {a_func.n_nodes}")
    return Adjacency(weights=(a_struct.weights + a_func.weights) / 2.0, kind="fused")


def renormalize(a: Adjacency) -> Adjacency:
    """Symmetric degree renormalization of the self-looped adjacency.

    Returns D^{-1/2} (A + I) D^{-1/2} where D is the diagonal degree matrix of
    A + I. The self-loops keep every degree >= 1, so this is always defined.
    """
    w = a.weights
    with_loops = w + np.eye(a.n_nodes)
    inv_sqrt_deg = 1.0 / np.sqrt(with_loops.sum(axis=1))
    out = with_loops * inv_sqrt_deg[:, None] * inv_sqrt_deg[None, :]
    out = (out + out.T) / 2.0
    return Adjacency(weights=out, kind="renormalized")


def symmetric_eigenvalues(m: np.ndarray, off_tol: float = 1e-12, max_sweeps: int = 60) -> np.ndarray:
    """All eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi rotations.

    Sweeps rotate away each off-diagonal entry in turn until the off-diagonal
    Frobenius norm drops below off_tol (or no further progress is possible at
    double precision).
    """
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    if not np.allclose(a, a.T, atol=1e-9):
        raise ValueError("matrix is not symmetric within 1e-9")
    a = (a + a.T) / 2.0
    n = a.shape[0]
    if n == 1:
        return a.diagonal().copy()

    def off_norm(mat):
        off = mat - np.diag(np.diag(mat))
        return math.sqrt(float((off ** 2).sum()))

    prev = math.inf
    for _ in range(max_sweeps):
        current = off_norm(a)
        if current < off_tol or current >= prev:
            break
        prev = current
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                # Rotation angle that zeroes a[p, q] (Golub & Van Loan formulation).
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = rot_p, rot_q
                rot_p = c * a[p, :] - s * a[q, :]
                rot_q = s * a[p, :] + c * a[q, :]
                a[p, :], a[q, :] = rot_p, rot_q
                a[p, q] = a[q, p] = 0.0
    return np.sort(a.diagonal())


def _binary_support(a: Adjacency) -> np.ndarray:
    support = (a.weights > 0).astype(float)
    np.fill_diagonal(support, 0.0)
    return support


def _hop_distances(support: np.ndarray) -> np.ndarray:
    """All-pairs unweighted hop distances via BFS; inf for unreachable pairs."""
    n = support.shape[0]
    neighbors = [np.flatnonzero(support[i]) for i in range(n)]
    dist = np.full((n, n), np.inf)
    for src in range(n):
        dist[src, src] = 0.0
        frontier = [src]
        d = 0
        while frontier:
            d += 1
            nxt = []
            for u in frontier:
                for v in neighbors[u]:
                    if math.isinf(dist[src, v]):
                        dist[src, v] = d
                        nxt.append(v)
            frontier = nxt
    return dist


def _weighted_path_lengths(a: Adjacency) -> np.ndarray:
    """All-pairs shortest path lengths with edge length 1/weight (Dijkstra)."""
    w = a.weights
    n = w.shape[0]
    lengths = np.where(w > 0, 1.0 / np.where(w > 0, w, 1.0), np.inf)
    dist = np.full((n, n), np.inf)
    for src in range(n):
        d = np.full(n, np.inf)
        d[src] = 0.0
        done = np.zeros(n, dtype=bool)
        for _ in range(n):
            u = -1
            best = np.inf
            for v in range(n):
                if not done[v] and d[v] < best:
                    best, u = d[v], v
            if u < 0:
                break
            done[u] = True
            relax = d[u] + lengths[u]
            d = np.where(~done & (relax < d), relax, d)
        dist[src] = d
    return dist


def graph_metrics(a: Adjacency, weighted_paths: bool = False) -> GraphMetrics:
    """Graph quality metrics on the binarized support (edge iff weight > 0).

    avg_shortest_path uses unweighted hop counts by default; with
    weighted_paths=True it uses edge length 1/weight instead. A disconnected
    support yields algebraic connectivity 0 and an infinite path length.
    """
    support = _binary_support(a)
    n = support.shape[0]
    degrees = support.sum(axis=1)
    avg_degree = float(degrees.mean())

    clustering = np.zeros(n)
    for i in range(n):
        nbrs = np.flatnonzero(support[i])
        d = len(nbrs)
        if d < 2:
            continue
        links = support[np.ix_(nbrs, nbrs)].sum() / 2.0
        clustering[i] = links / (d * (d - 1) / 2.0)
    avg_clustering = float(clustering.mean())

    hops = _hop_distances(support)
    connected = bool(np.all(np.isfinite(hops)))
    if connected:
        pair_dist = _weighted_path_lengths(a) if weighted_paths else hops
        iu = np.triu_indices(n, k=1)
        avg_path = float(pair_dist[iu].mean()) if n > 1 else 0.0
    else:
        avg_path = math.inf

    if connected:
        laplacian = np.diag(degrees) - support
        eigs = symmetric_eigenvalues(laplacian)
        lam2 = float(max(eigs[1], 0.0)) if n > 1 else 0.0
    else:
        lam2 = 0.0

    return GraphMetrics(
        algebraic_connectivity=lam2,
        avg_clustering=avg_clustering,
        avg_shortest_path=avg_path,
        avg_degree=avg_degree,
    )


def trial_propagation_matrix(
    trial: Trial, layout: ElectrodeLayout, config: GraphConfig, a_struct: Adjacency | None = None
) -> Adjacency:
    """Renormalized fused adjacency for one trial (structural part may be precomputed)."""
    if a_struct is None:
        a_struct = structural_adjacency(layout, config)
    fused = fuse_adjacency(a_struct, functional_adjacency(trial, config))
    return renormalize(fused)


def write_adjacency_csv(path: str | Path, a: Adjacency) -> None:
    np.savetxt(path, a.weights, delimiter=",", fmt="%.17g")


def write_metrics_json(path: str | Path, metrics: GraphMetrics) -> None:
    Path(path).write_text(json.dumps(metrics.to_dict(), indent=2) + "\n", encoding="utf-8")
