"""Brute-force reference implementations used by the graph and metric tests.

Each one is written from the textbook definition, deliberately unlike the
package code (dense matrices, explicit path enumeration, pair counting).
"""

import itertools

import numpy as np

from zdtdetect.graph import graph_from_pairs


def random_graph(rng, max_nodes=8, p_edge=None):
    n = int(rng.integers(1, max_nodes + 1))
    p = rng.uniform(0.1, 0.7) if p_edge is None else p_edge
    names = [f"h{k}" for k in rng.permutation(n)]
    pairs = [(names[0], names[0])] if n == 1 else []
    for i in range(n):
        for j in range(n):
            if (i != j and rng.random() < p) or (i == j and rng.random() < 0.05):
                pairs += [(names[i], names[j])] * int(rng.integers(1, 4))
    # every node must appear in some flow
    for i in range(n):
        if not any(names[i] in pr for pr in pairs):
            j = int(rng.integers(n))
            pairs.append((names[i], names[j]))
    order = rng.permutation(len(pairs))
    return graph_from_pairs([pairs[k] for k in order])


def dense(g):
    """(weight matrix, unweighted adjacency) indexed like g.nodes."""
    W = np.zeros((g.n, g.n))
    for (u, v), w in g.edges.items():
        W[u, v] = w
    return W, (W > 0).astype(float)


def degree_oracle(g):
    _, A = dense(g)
    out = {}
    for v in range(g.n):
        nb = {u for u in range(g.n) if u != v and (A[v, u] or A[u, v])}
        out[g.nodes[v]] = len(nb) / (g.n - 1) if g.n > 1 else 0.0
    return out


def clustering_oracle(g):
    _, A = dense(g)
    U = ((A + A.T) > 0).astype(int)
    np.fill_diagonal(U, 0)
    out = {}
    for v in range(g.n):
        nb = [u for u in range(g.n) if U[v, u]]
        k = len(nb)
        if k < 2:
            out[g.nodes[v]] = 0.0
            continue
        tri = sum(1 for a, b in itertools.combinations(nb, 2) if U[a, b])
        out[g.nodes[v]] = tri / (k * (k - 1) / 2)
    return out


def _all_shortest_paths(A, s, t):
    n = A.shape[0]
    best, found = None, []
    stack = [(s, (s,))]
    while stack:
        v, path = stack.pop()
        if best is not None and len(path) > best:
            continue
        if v == t:
            if best is None or len(path) < best:
                best, found = len(path), [path]
            elif len(path) == best:
                found.append(path)
            continue
        for u in range(n):
            if A[v, u] and u != v and u not in path:
                stack.append((u, path + (u,)))
    return found


def betweenness_oracle(g):
    _, A = dense(g)
    cb = np.zeros(g.n)
    for s in range(g.n):
        for t in range(g.n):
            if s == t:
                continue
            paths = _all_shortest_paths(A, s, t)
            for path in paths:
                for v in path[1:-1]:
                    cb[v] += 1.0 / len(paths)
    return {ip: float(cb[i]) for i, ip in enumerate(g.nodes)}


def pagerank_oracle(g, damping=0.85):
    """Solve (I - d P^T) x = (1-d)/n * 1 with dangling rows spread uniformly."""
    W, _ = dense(g)
    n = g.n
    P = np.empty((n, n))
    for i in range(n):
        s = W[i].sum()
        P[i] = W[i] / s if s > 0 else np.full(n, 1.0 / n)
    x = np.linalg.solve(np.eye(n) - damping * P.T, np.full(n, (1 - damping) / n))
    return {ip: float(x[i]) for i, ip in enumerate(g.nodes)}


def hits_oracle(g, iters=20000, tol=1e-15):
    _, A = dense(g)
    h = np.ones(g.n) / np.sqrt(g.n)
    a = np.zeros(g.n)
    for _ in range(iters):
        a2 = A.T @ h
        a2 /= np.linalg.norm(a2)
        h2 = A @ a2
        h2 /= np.linalg.norm(h2)
        done = max(np.abs(h2 - h).max(), np.abs(a2 - a).max()) < tol
        h, a = h2, a2
        if done:
            break
    return {ip: float(h[i]) for i, ip in enumerate(g.nodes)}, {ip: float(a[i]) for i, ip in enumerate(g.nodes)}


def auc_pair_count(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y]
    neg = [s for s, y in zip(scores, labels) if not y]
    wins = 0.0
    for p in pos:
        for q in neg:
            wins += 1.0 if p > q else (0.5 if p == q else 0.0)
    return wins / (len(pos) * len(neg))


def max_abs_diff(a: dict, b: dict) -> float:
    assert a.keys() == b.keys()
    return max((abs(a[k] - b[k]) for k in a), default=0.0)


def finite_difference_check(input_dim=10, n_rows=16, seed=0, eps=1e-5):
    """Max relative error between backprop and central differences over every parameter (float64)."""
    from zdtdetect.neural import build_architecture, init_params, loss_and_grads

    rng = np.random.default_rng(seed)
    arch = build_architecture(input_dim)
    weights, biases = init_params(arch, seed, dtype=np.float64)
    biases = [rng.uniform(-0.1, 0.1, b.shape) for b in biases]
    x = rng.uniform(0, 1, (n_rows, input_dim))
    _, gw, gb = loss_and_grads(weights, biases, x)
    worst = 0.0
    count = 0
    for params, grads in ((weights, gw), (biases, gb)):
        for p, g in zip(params, grads):
            for idx in np.ndindex(p.shape):
                old = p[idx]
                p[idx] = old + eps
                up, _, _ = loss_and_grads(weights, biases, x)
                p[idx] = old - eps
                down, _, _ = loss_and_grads(weights, biases, x)
                p[idx] = old
                num = (up - down) / (2 * eps)
                ana = g[idx]
                scale = max(abs(num), abs(ana))
                rel = 0.0 if scale == 0 else abs(num - ana) / scale
                worst = max(worst, rel)
                count += 1
    return worst, count
