"""IP interaction graph and per-node centrality / community algorithms.

Nodes are indexed by order of first appearance in the flow corpus, so every
result is independent of the IP strings themselves. Degree centrality,
clustering and label propagation use the undirected projection; betweenness
and HITS use the directed unweighted graph; PageRank uses edge weights.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ConvergenceWarning


@dataclass(frozen=True)
class NetworkGraph:
    nodes: tuple[str, ...]
    index: dict
    edges: dict  # (src_idx, dst_idx) -> flow count
    out_adj: tuple[tuple[int, ...], ...]
    in_adj: tuple[tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def weight(self, src: str, dst: str) -> int:
        return self.edges.get((self.index[src], self.index[dst]), 0)

    def undirected_neighbors(self) -> list[set[int]]:
        """Distinct neighbours ignoring direction and self-loops."""
        nbrs = [set() for _ in range(self.n)]
        for u, v in self.edges:
            if u != v:
                nbrs[u].add(v)
                nbrs[v].add(u)
        return nbrs

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if not self.edges:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty, np.zeros(0)
        keys = list(self.edges)
        src = np.fromiter((k[0] for k in keys), dtype=np.int64, count=len(keys))
        dst = np.fromiter((k[1] for k in keys), dtype=np.int64, count=len(keys))
        w = np.fromiter(self.edges.values(), dtype=np.float64, count=len(keys))
        return src, dst, w


def graph_from_pairs(pairs: Iterable[tuple[str, str]]) -> NetworkGraph:
    index: dict[str, int] = {}
    nodes: list[str] = []
    edges: dict[tuple[int, int], int] = {}
    for s, d in pairs:
        for ip in (s, d):
            if ip not in index:
                index[ip] = len(nodes)
                nodes.append(ip)
        key = (index[s], index[d])
        edges[key] = edges.get(key, 0) + 1
    out_adj: list[list[int]] = [[] for _ in nodes]
    in_adj: list[list[int]] = [[] for _ in nodes]
    for u, v in edges:
        out_adj[u].append(v)
        in_adj[v].append(u)
    return NetworkGraph(
        tuple(nodes), index, edges, tuple(map(tuple, out_adj)), tuple(map(tuple, in_adj))
    )


def build_graph(ds) -> NetworkGraph:
    """One node per IP, one directed edge per (src, dst) weighted by flow count."""
    return graph_from_pairs((r.src_ip, r.dst_ip) for r in ds)


def _as_map(g: NetworkGraph, values) -> dict[str, float]:
    return {ip: float(values[i]) for i, ip in enumerate(g.nodes)}


def degree_centrality(g: NetworkGraph) -> dict[str, float]:
    if g.n <= 1:
        return {ip: 0.0 for ip in g.nodes}
    nbrs = g.undirected_neighbors()
    return _as_map(g, [len(s) / (g.n - 1) for s in nbrs])


def _pagerank_vector(g: NetworkGraph, damping: float, tol: float, max_iter: int):
    n = g.n
    src, dst, w = g.edge_arrays()
    out_w = np.bincount(src, weights=w, minlength=n)
    dangling = out_w == 0
    coef = w / np.where(out_w[src] > 0, out_w[src], 1.0)
    x = np.full(n, 1.0 / n)
    converged = False
    for _ in range(max_iter):
        flow = np.bincount(dst, weights=x[src] * coef, minlength=n)
        new = (1.0 - damping) / n + damping * (flow + x[dangling].sum() / n)
        new /= new.sum()
        delta = np.abs(new - x).sum()
        x = new
        if delta < tol:
            converged = True
            break
    return x, converged


def pagerank(g: NetworkGraph, damping: float = 0.85, tol: float = 1e-9, max_iter: int = 200) -> dict[str, float]:
    """Weighted PageRank; dangling mass is spread uniformly.

    Emits ConvergenceWarning (and still returns the last iterate) when
    ``max_iter`` is reached.
    """
    if g.n == 0:
        return {}
    x, converged = _pagerank_vector(g, damping, tol, max_iter)
    if not converged:
        warnings.warn(f"pagerank did not converge in {max_iter} iterations", ConvergenceWarning, stacklevel=2)
    return _as_map(g, x)


def clustering_coefficient(g: NetworkGraph) -> dict[str, float]:
    nbrs = g.undirected_neighbors()
    out = []
    for v in range(g.n):
        k = len(nbrs[v])
        if k < 2:
            out.append(0.0)
            continue
        links = sum(len(nbrs[u] & nbrs[v]) for u in nbrs[v]) // 2
        out.append(2.0 * links / (k * (k - 1)))
    return _as_map(g, out)


def betweenness_centrality(g: NetworkGraph) -> dict[str, float]:
    """Unnormalised shortest-path betweenness on the directed unweighted graph (Brandes)."""
    n = g.n
    adj = [tuple(v for v in g.out_adj[u] if v != u) for u in range(n)]
    cb = [0.0] * n
    for s in range(n):
        stack = []
        preds: list[list[int]] = [[] for _ in range(n)]
        sigma = [0] * n
        dist = [-1] * n
        sigma[s] = 1
        dist[s] = 0
        queue = deque([s])
        while queue:
            v = queue.popleft()
            stack.append(v)
            dv = dist[v] + 1
            for w in adj[v]:
                if dist[w] < 0:
                    dist[w] = dv
                    queue.append(w)
                if dist[w] == dv:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = [0.0] * n
        while stack:
            w = stack.pop()
            coeff = (1.0 + delta[w]) / sigma[w]
            for v in preds[w]:
                delta[v] += sigma[v] * coeff
            if w != s:
                cb[w] += delta[w]
    return _as_map(g, cb)


# below this size HITS runs densely with repeated squaring of A^T A, which
# reaches the power-iteration limit even when the top two singular values
# nearly coincide (plain iteration can need thousands of steps there)
DENSE_HITS_MAX_NODES = 2048


def _hits_dense(g: NetworkGraph, tol: float, max_iter: int):
    n = g.n
    src, dst, _ = g.edge_arrays()
    A = np.zeros((n, n))
    A[src, dst] = 1.0
    # first authority iterate from a uniform hub vector, as in the plain iteration
    a0 = A.T @ np.full(n, 1.0 / np.sqrt(n))
    a0 /= np.linalg.norm(a0)
    M = A.T @ A
    auth = a0
    converged = False
    for _ in range(max_iter):
        M = M @ M
        M /= np.abs(M).max()
        new = M @ a0
        norm = np.linalg.norm(new)
        if norm == 0:
            break
        new /= norm
        change = np.abs(new - auth).max()
        auth = new
        if change < tol:
            converged = True
            break
    hub = A @ auth
    hub /= np.linalg.norm(hub)
    return hub, auth, converged


def _hits_vectors(g: NetworkGraph, tol: float, max_iter: int):
    n = g.n
    if n <= DENSE_HITS_MAX_NODES:
        return _hits_dense(g, tol, max_iter)
    src, dst, _ = g.edge_arrays()
    hub = np.full(n, 1.0 / np.sqrt(n))
    auth = np.zeros(n)
    converged = False
    for _ in range(max_iter):
        new_auth = np.bincount(dst, weights=hub[src], minlength=n)
        new_auth /= np.linalg.norm(new_auth)
        new_hub = np.bincount(src, weights=new_auth[dst], minlength=n)
        new_hub /= np.linalg.norm(new_hub)
        change = max(np.abs(new_hub - hub).max(), np.abs(new_auth - auth).max())
        hub, auth = new_hub, new_auth
        if change < tol:
            converged = True
            break
    return hub, auth, converged


def hits(g: NetworkGraph, tol: float = 1e-9, max_iter: int = 200) -> tuple[dict[str, float], dict[str, float]]:
    """Hub and authority scores on the unweighted adjacency, each L2-normalised."""
    if g.edge_count == 0:
        zeros = {ip: 0.0 for ip in g.nodes}
        return zeros, dict(zeros)
    hub, auth, converged = _hits_vectors(g, tol, max_iter)
    if not converged:
        warnings.warn(f"HITS did not converge in {max_iter} iterations", ConvergenceWarning, stacklevel=2)
    return _as_map(g, hub), _as_map(g, auth)


def _label_propagation_vector(g: NetworkGraph, seed: int, max_iter: int) -> list[int]:
    n = g.n
    weights: list[dict[int, int]] = [{} for _ in range(n)]
    for (u, v), w in g.edges.items():
        if u == v:
            continue
        weights[u][v] = weights[u].get(v, 0) + w
        weights[v][u] = weights[v].get(u, 0) + w
    nbr_items = [tuple(sorted(d.items())) for d in weights]
    labels = list(range(n))
    rng = np.random.default_rng(seed)
    for _ in range(max_iter):
        changed = False
        for v in rng.permutation(n).tolist():
            if not nbr_items[v]:
                continue
            votes: dict[int, int] = {}
            for u, w in nbr_items[v]:
                lab = labels[u]
                votes[lab] = votes.get(lab, 0) + w
            top = max(votes.values())
            best = min(lab for lab, c in votes.items() if c == top)
            if best != labels[v]:
                labels[v] = best
                changed = True
        if not changed:
            break
    # canonical ids: communities numbered by their lowest node index
    remap: dict[int, int] = {}
    return [remap.setdefault(lab, len(remap)) for lab in labels]


def label_propagation(g: NetworkGraph, seed: int = 0, max_iter: int = 100) -> dict[str, int]:
    """Asynchronous weighted label propagation on the undirected projection.

    Visit order is reshuffled every sweep from a seeded RNG; vote ties go to
    the smallest label id.
    """
    return {ip: c for ip, c in zip(g.nodes, _label_propagation_vector(g, seed, max_iter))}
