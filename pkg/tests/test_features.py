import math

import numpy as np
import pytest

from oracles import random_graph
from zdtdetect import graph as G
from zdtdetect.errors import UnknownNode
from zdtdetect.features import (
    FLOW_FEATURES,
    FLOW_ONLY,
    FULL_SCHEMA,
    LOG_SCALED,
    NODE_FEATURES,
    NodeFeatureTable,
    compute_node_features,
    featurize,
    featurize_dataset,
    flow_features,
    read_feature_csv,
)
from zdtdetect.flows import BENIGN, FlowDataset, FlowRecord
from zdtdetect.synth import DEMO_PROFILES, generate_benign


def _rec(src, dst, ts=0.0, **kw):
    fields = dict(src_port=1000, dst_port=80, protocol=6, duration=0.1, total_bytes=10, packet_count=1)
    fields.update(kw)
    return FlowRecord(ts, src, dst, label=BENIGN, **fields)


def _ds(pairs):
    return FlowDataset(tuple(_rec(s, d, float(i)) for i, (s, d) in enumerate(pairs)))


def test_schema_shape():
    assert len(FULL_SCHEMA) == 27 and len(set(FULL_SCHEMA)) == 27
    assert FULL_SCHEMA[:6] == FLOW_FEATURES
    assert FULL_SCHEMA[-1] == "cross_community"
    assert "src_log_betweenness" in FULL_SCHEMA and "dst_pagerank" in FULL_SCHEMA


def test_two_node_table():
    nft = compute_node_features(G.graph_from_pairs([("A", "B")]))
    a, b = nft.row("A"), nft.row("B")
    assert a["degree_centrality"] == b["degree_centrality"] == 1.0
    assert a["pagerank"] == pytest.approx(20 / 57) and b["pagerank"] == pytest.approx(37 / 57)
    assert a["hub"] == pytest.approx(1.0) and b["authority"] == pytest.approx(1.0)
    assert a["hub"] + a["authority"] + b["hub"] + b["authority"] == pytest.approx(2.0)
    assert (a["out_degree"], a["in_degree"], b["in_weight"], b["out_weight"]) == (1, 0, 1, 0)
    assert a["clustering"] == b["clustering"] == a["betweenness"] == 0.0
    assert a["community"] == b["community"]


def test_empty_table():
    nft = compute_node_features(G.graph_from_pairs([]))
    assert len(nft) == 0 and nft.values.shape == (0, len(NODE_FEATURES))


def test_table_matches_standalone_ops():
    rng = np.random.default_rng(2)
    g = random_graph(rng, max_nodes=20, p_edge=0.15)
    while g.n < 20:
        g = random_graph(rng, max_nodes=20, p_edge=0.15)
    nft = compute_node_features(g, seed=9)
    assert nft.column("degree_centrality") == G.degree_centrality(g)
    assert nft.column("pagerank") == G.pagerank(g)
    assert nft.column("clustering") == G.clustering_coefficient(g)
    assert nft.column("betweenness") == G.betweenness_centrality(g)
    hub, auth = G.hits(g)
    assert nft.column("hub") == hub and nft.column("authority") == auth
    assert nft.column("community") == G.label_propagation(g, seed=9)
    for ip in g.nodes:
        i = g.index[ip]
        row = nft.row(ip)
        assert row["out_weight"] == sum(w for (u, _), w in g.edges.items() if u == i)
        assert row["in_weight"] == sum(w for (_, v), w in g.edges.items() if v == i)
        assert row["out_degree"] == sum(1 for (u, _) in g.edges if u == i)


def test_flow_feature_examples():
    f = flow_features(_rec("a", "b", duration=0.0, total_bytes=0))
    assert f[0] == 0.0 and f[4] == 0.0
    # the third listed feature (index 2) is the destination port
    assert flow_features(_rec("a", "b", dst_port=65535))[2] == 1.0
    assert flow_features(_rec("a", "b", ts=43200.0))[5] == 0.5
    assert flow_features(_rec("a", "b", ts=86400.0 * 18_500 + 21600))[5] == 0.25
    f = flow_features(_rec("a", "b", duration=2.0, total_bytes=999, src_port=65535, protocol=17))
    assert f == [math.log1p(2.0), 1.0, 80 / 65535, 17.0, math.log1p(999), 0.0]


def test_cross_community():
    tri2 = _ds([("a", "b"), ("b", "c"), ("c", "a"), ("x", "y"), ("y", "z"), ("z", "x")])
    nft = compute_node_features(G.build_graph(tri2))
    fm = featurize(FlowDataset((_rec("a", "b"), _rec("a", "x"))), nft)
    assert fm.values[:, -1].tolist() == [0.0, 1.0]


def test_shapes_and_order():
    ds = generate_benign(DEMO_PROFILES["net-a"], 300, seed=1)
    fm, nft = featurize_dataset(ds)
    assert fm.shape == (300, 27) and fm.columns == FULL_SCHEMA
    flow_only, none = featurize_dataset(ds, FLOW_ONLY)
    assert flow_only.shape == (300, 6) and none is None
    np.testing.assert_array_equal(flow_only.values, fm.values[:, :6])
    i = 123
    r = ds.records[i]
    src = nft.values[nft.index[r.src_ip]].copy()
    mask = np.array([f in LOG_SCALED for f in NODE_FEATURES])
    src[mask] = np.log1p(src[mask])
    np.testing.assert_array_equal(fm.values[i, 6:16], src)


def test_unknown_node():
    nft = compute_node_features(G.graph_from_pairs([("a", "b")]))
    ds = FlowDataset((_rec("a", "b"), _rec("a", "zz")))
    with pytest.raises(UnknownNode, match="zz"):
        featurize(ds, nft)
    fm = featurize(ds, nft, on_unknown="zero")
    assert fm.unknown_node.tolist() == [False, True]
    assert not fm.values[1, 16:].any()
    assert fm.values[1, 6:16].any()


def test_relabel_invariance():
    ds = generate_benign(DEMO_PROFILES["net-c"], 400, seed=2)
    ips = sorted({ip for r in ds for ip in (r.src_ip, r.dst_ip)})
    rng = np.random.default_rng(0)
    new = {ip: f"node-{k}" for ip, k in zip(ips, rng.permutation(len(ips)))}
    renamed = FlowDataset(
        tuple(
            FlowRecord(r.timestamp, new[r.src_ip], new[r.dst_ip], r.src_port, r.dst_port, r.protocol, r.duration,
                       r.total_bytes, r.packet_count, r.label)
            for r in ds
        )
    )
    a, _ = featurize_dataset(ds, seed=5)
    b, _ = featurize_dataset(renamed, seed=5)
    np.testing.assert_array_equal(a.values, b.values)


def test_determinism():
    ds = generate_benign(DEMO_PROFILES["net-b"], 500, seed=3)
    a, ta = featurize_dataset(ds, seed=1)
    b, tb = featurize_dataset(ds, seed=1)
    assert a.values.tobytes() == b.values.tobytes()
    assert ta.to_csv() == tb.to_csv()


def test_node_table_csv_round_trip():
    nft = compute_node_features(G.build_graph(generate_benign(DEMO_PROFILES["net-a"], 200, seed=4)))
    back = NodeFeatureTable.from_csv(nft.to_csv())
    assert back.nodes == nft.nodes
    np.testing.assert_array_equal(back.values, nft.values)
    np.testing.assert_array_equal(back.community, nft.community)


def test_feature_csv_round_trip(tmp_path):
    ds = generate_benign(DEMO_PROFILES["net-a"], 50, seed=4)
    fm, _ = featurize_dataset(ds)
    p = tmp_path / "f.csv"
    p.write_text(fm.to_csv(labels=[str(r.label) for r in ds]))
    back, labels = read_feature_csv(p)
    assert back.columns == FULL_SCHEMA and labels == ["benign"] * 50
    np.testing.assert_array_equal(back.values, fm.values)


def test_unknown_mode():
    with pytest.raises(ValueError):
        featurize(FlowDataset(()), None, "packets")
