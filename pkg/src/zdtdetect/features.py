"""Per-node feature tables and per-flow feature vectors."""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import graph as G
from .errors import ConvergenceWarning, UnknownNode

FLOW_ONLY = "flow_only"
FLOW_AND_GRAPH = "flow_and_graph"
FEATURE_MODES = (FLOW_ONLY, FLOW_AND_GRAPH)

FLOW_FEATURES = (
    "log_duration",
    "src_port",
    "dst_port",
    "protocol",
    "log_bytes",
    "time_of_day",
)

NODE_FEATURES = (
    "degree_centrality",
    "pagerank",
    "clustering",
    "betweenness",
    "in_degree",
    "out_degree",
    "in_weight",
    "out_weight",
    "hub",
    "authority",
)

# count-valued node features enter flow vectors as log1p, like duration and bytes
LOG_SCALED = ("betweenness", "in_degree", "out_degree", "in_weight", "out_weight")
_LOG_MASK = np.array([f in LOG_SCALED for f in NODE_FEATURES])


def _vector_name(f: str) -> str:
    return f"log_{f}" if f in LOG_SCALED else f


FULL_SCHEMA = (
    FLOW_FEATURES
    + tuple(f"src_{_vector_name(f)}" for f in NODE_FEATURES)
    + tuple(f"dst_{_vector_name(f)}" for f in NODE_FEATURES)
    + ("cross_community",)
)


def schema_for(mode: str) -> tuple[str, ...]:
    if mode == FLOW_ONLY:
        return FLOW_FEATURES
    if mode == FLOW_AND_GRAPH:
        return FULL_SCHEMA
    raise ValueError(f"unknown feature mode {mode!r}; expected one of {FEATURE_MODES}")


@dataclass(frozen=True)
class NodeFeatureTable:
    nodes: tuple[str, ...]
    values: np.ndarray  # (n_nodes, len(NODE_FEATURES)) float64
    community: np.ndarray  # (n_nodes,) int64
    index: dict = field(repr=False)
    warnings: tuple[str, ...] = ()

    def __len__(self):
        return len(self.nodes)

    def row(self, ip: str) -> dict:
        i = self.index[ip]
        out = {name: float(v) for name, v in zip(NODE_FEATURES, self.values[i])}
        out["community"] = int(self.community[i])
        return out

    def column(self, name: str) -> dict:
        if name == "community":
            return {ip: int(c) for ip, c in zip(self.nodes, self.community)}
        j = NODE_FEATURES.index(name)
        return {ip: float(v) for ip, v in zip(self.nodes, self.values[:, j])}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("node",) + NODE_FEATURES + ("community",))
        for ip, vals, c in zip(self.nodes, self.values, self.community):
            w.writerow([ip] + [repr(float(v)) for v in vals] + [int(c)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> NodeFeatureTable:
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        expected = ["node", *NODE_FEATURES, "community"]
        if header != expected:
            raise ValueError(f"unexpected node table header {header}")
        nodes = tuple(r[0] for r in body)
        values = np.array([[float(x) for x in r[1:-1]] for r in body], dtype=np.float64).reshape(
            len(body), len(NODE_FEATURES)
        )
        community = np.array([int(r[-1]) for r in body], dtype=np.int64)
        return cls(nodes, values, community, {ip: i for i, ip in enumerate(nodes)})


def compute_node_features(g: G.NetworkGraph, seed: int = 0) -> NodeFeatureTable:
    n = g.n
    if n == 0:
        return NodeFeatureTable((), np.zeros((0, len(NODE_FEATURES))), np.zeros(0, dtype=np.int64), {})
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        degree = G.degree_centrality(g)
        pr = G.pagerank(g)
        cc = G.clustering_coefficient(g)
        bc = G.betweenness_centrality(g)
        hub, auth = G.hits(g)
    messages = tuple(str(w.message) for w in caught if issubclass(w.category, ConvergenceWarning))
    for m in messages:
        warnings.warn(m, ConvergenceWarning, stacklevel=2)

    src, dst, w = g.edge_arrays()
    ones = np.ones_like(w)
    in_deg = np.bincount(dst, weights=ones, minlength=n)
    out_deg = np.bincount(src, weights=ones, minlength=n)
    in_w = np.bincount(dst, weights=w, minlength=n)
    out_w = np.bincount(src, weights=w, minlength=n)

    values = np.empty((n, len(NODE_FEATURES)))
    for i, ip in enumerate(g.nodes):
        values[i] = (degree[ip], pr[ip], cc[ip], bc[ip], in_deg[i], out_deg[i], in_w[i], out_w[i], hub[ip], auth[ip])
    lp = G.label_propagation(g, seed=seed)
    community = np.array([lp[ip] for ip in g.nodes], dtype=np.int64)
    return NodeFeatureTable(g.nodes, values, community, dict(g.index), messages)


def flow_features(r) -> list[float]:
    return [
        math.log1p(r.duration),
        r.src_port / 65535.0,
        r.dst_port / 65535.0,
        float(r.protocol),
        math.log1p(r.total_bytes),
        (r.timestamp % 86400.0) / 86400.0,
    ]


def flow_feature_matrix(records) -> np.ndarray:
    n = len(records)
    ts = np.fromiter((r.timestamp for r in records), dtype=np.float64, count=n)
    out = np.empty((n, len(FLOW_FEATURES)))
    out[:, 0] = np.log1p(np.fromiter((r.duration for r in records), dtype=np.float64, count=n))
    out[:, 1] = np.fromiter((r.src_port for r in records), dtype=np.float64, count=n) / 65535.0
    out[:, 2] = np.fromiter((r.dst_port for r in records), dtype=np.float64, count=n) / 65535.0
    out[:, 3] = np.fromiter((r.protocol for r in records), dtype=np.float64, count=n)
    out[:, 4] = np.log1p(np.fromiter((r.total_bytes for r in records), dtype=np.float64, count=n))
    out[:, 5] = np.mod(ts, 86400.0) / 86400.0
    return out


@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray
    columns: tuple[str, ...]
    unknown_node: np.ndarray | None = None  # per-row flag, set only by the zero-fill fallback

    @property
    def shape(self):
        return self.values.shape

    def __len__(self):
        return self.values.shape[0]

    def rows(self, idx) -> FeatureMatrix:
        unknown = None if self.unknown_node is None else self.unknown_node[idx]
        return FeatureMatrix(self.values[idx], self.columns, unknown)

    def to_csv(self, labels=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns + (("label",) if labels is not None else ()))
        for i, row in enumerate(self.values):
            cells = [repr(float(v)) for v in row]
            if labels is not None:
                cells.append(str(labels[i]))
            w.writerow(cells)
        return buf.getvalue()


def read_feature_csv(path) -> tuple[FeatureMatrix, list[str] | None]:
    """Read a feature CSV written by :meth:`FeatureMatrix.to_csv`; returns (matrix, labels)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        has_label = header[-1] == "label"
        columns = tuple(header[:-1] if has_label else header)
        rows, labels = [], []
        for row in reader:
            if has_label:
                labels.append(row[-1])
                row = row[:-1]
            rows.append([float(x) for x in row])
    values = np.array(rows, dtype=np.float64).reshape(len(rows), len(columns))
    return FeatureMatrix(values, columns), (labels if has_label else None)


def featurize(ds, nft: NodeFeatureTable, mode: str = FLOW_AND_GRAPH, on_unknown: str = "raise") -> FeatureMatrix:
    """One feature row per flow, in dataset order.

    ``on_unknown="zero"`` replaces the graph block of an endpoint missing
    from ``nft`` with zeros (cross_community 0) and flags the row instead of
    raising UnknownNode.
    """
    records = ds.records if hasattr(ds, "records") else list(ds)
    columns = schema_for(mode)
    flow = flow_feature_matrix(records)
    if mode == FLOW_ONLY:
        return FeatureMatrix(flow, columns)
    n = len(records)
    index = nft.index
    src_idx = np.fromiter((index.get(r.src_ip, -1) for r in records), dtype=np.int64, count=n)
    dst_idx = np.fromiter((index.get(r.dst_ip, -1) for r in records), dtype=np.int64, count=n)
    unknown = (src_idx < 0) | (dst_idx < 0)
    if unknown.any() and on_unknown == "raise":
        i = int(np.flatnonzero(unknown)[0])
        r = records[i]
        missing = r.src_ip if src_idx[i] < 0 else r.dst_ip
        raise UnknownNode(f"endpoint {missing!r} of flow {i} is not in the node feature table")
    k = len(NODE_FEATURES)
    node_vals = nft.values.copy()
    node_vals[:, _LOG_MASK] = np.log1p(node_vals[:, _LOG_MASK])
    padded = np.vstack([node_vals, np.zeros((1, k))])
    comm = np.concatenate([nft.community, [-1]])
    out = np.empty((n, len(columns)))
    out[:, :6] = flow
    out[:, 6 : 6 + k] = padded[src_idx]
    out[:, 6 + k : 6 + 2 * k] = padded[dst_idx]
    cross = comm[src_idx] != comm[dst_idx]
    out[:, -1] = np.where(unknown, 0.0, cross.astype(np.float64))
    return FeatureMatrix(out, columns, unknown if on_unknown != "raise" else None)


def featurize_dataset(ds, mode: str = FLOW_AND_GRAPH, seed: int = 0) -> tuple[FeatureMatrix, NodeFeatureTable | None]:
    """Build the graph over ``ds`` itself and featurise every flow."""
    if mode == FLOW_ONLY:
        return featurize(ds, None, mode), None
    nft = compute_node_features(G.build_graph(ds), seed=seed)
    return featurize(ds, nft, mode), nft
