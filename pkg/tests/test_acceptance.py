"""Acceptance criteria 1-9.

Each test records one ``criterion N: PASS|FAIL ...`` line, printed in the
terminal summary, then asserts. Criteria 5-7 share one study over the
3-network demo corpus (20k flows per network, seed 42).
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from oracles import (
    auc_pair_count,
    betweenness_oracle,
    clustering_oracle,
    degree_oracle,
    finite_difference_check,
    hits_oracle,
    max_abs_diff,
    pagerank_oracle,
    random_graph,
)
from zdtdetect import graph as G
from zdtdetect.detectors import AnomalyDetector, NoveltyDetector, batch_detect_stream
from zdtdetect.experiments import (
    ExperimentConfig,
    Study,
    run_ad_generalization,
    run_experiment,
    run_novelty_table,
    run_overall_comparison,
)
from zdtdetect.features import FLOW_AND_GRAPH, FLOW_ONLY, featurize_dataset
from zdtdetect.flows import dumps_dataset
from zdtdetect.metrics import roc_auc, roc_curve, trapezoid_auc
from zdtdetect.neural import AEModel, TrainConfig, build_architecture, dumps_model, fit_autoencoder, init_params
from zdtdetect.synth import demo_spec, generate_corpus

PINS = json.loads((Path(__file__).with_name("regression_pins.json")).read_text())
PIN_TOL = PINS["tolerance"]


def verdict(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"criterion {n}: {detail}"


@pytest.fixture(scope="module")
def corpus():
    c, _ = generate_corpus(demo_spec())
    return c


@pytest.fixture(scope="module")
def study(corpus):
    return Study(corpus, ExperimentConfig())


def test_criterion_1_graph_oracles():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = dict.fromkeys(("degree", "clustering", "betweenness", "pagerank", "pagerank_sum", "hits"), 0.0)
    for _ in range(200):
        g = random_graph(rng)
        worst["degree"] = max(worst["degree"], max_abs_diff(G.degree_centrality(g), degree_oracle(g)))
        worst["clustering"] = max(worst["clustering"], max_abs_diff(G.clustering_coefficient(g), clustering_oracle(g)))
        worst["betweenness"] = max(worst["betweenness"], max_abs_diff(G.betweenness_centrality(g), betweenness_oracle(g)))
        pr = G.pagerank(g)
        worst["pagerank_sum"] = max(worst["pagerank_sum"], abs(sum(pr.values()) - 1.0))
        worst["pagerank"] = max(worst["pagerank"], max_abs_diff(pr, pagerank_oracle(g)))
        hub, auth = G.hits(g)
        ho, ao = hits_oracle(g)
        worst["hits"] = max(worst["hits"], max_abs_diff(hub, ho), max_abs_diff(auth, ao))
    elapsed = time.perf_counter() - t0
    limits = {"degree": 1e-9, "clustering": 1e-9, "betweenness": 1e-9, "pagerank_sum": 1e-9, "pagerank": 1e-8, "hits": 1e-8}
    ok = all(worst[k] <= limits[k] for k in limits) and elapsed < 30
    detail = " ".join(f"{k}={v:.1e}" for k, v in worst.items())
    verdict(1, ok, f"{detail} time={elapsed:.1f}s")


def test_criterion_2_gradient_check():
    t0 = time.perf_counter()
    worst, count = finite_difference_check(input_dim=10, eps=1e-5)
    elapsed = time.perf_counter() - t0
    verdict(2, worst < 1e-4 and elapsed < 10, f"max_rel_err={worst:.2e} over {count} parameters time={elapsed:.1f}s")


def test_criterion_3_architecture():
    arch = build_architecture(27)
    ok = arch.widths == (27, 19, 14, 10, 6, 10, 14, 19, 27) and arch.latent == 6
    for d in range(1, 201):
        a = build_architecture(d)
        w = a.widths
        ok = ok and a.latent == 6 and w == tuple(reversed(w)) and a.decoder == tuple(reversed(a.encoder))
    verdict(3, ok, f"widths(27)={arch.widths}, mirror symmetric for d=1..200")


def test_criterion_4_auc_oracle():
    rng = np.random.default_rng(4)
    exact = 0
    worst_trap = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 80))
        s = np.round(rng.normal(size=n), int(rng.integers(0, 4)))
        y = rng.integers(0, 2, n)
        y[rng.permutation(n)[:2]] = [0, 1]
        auc = roc_auc(s, y)
        exact += auc == auc_pair_count(s.tolist(), y.tolist())
        worst_trap = max(worst_trap, abs(trapezoid_auc(roc_curve(s, y)) - auc))
    verdict(4, exact == 1000 and worst_trap <= 1e-12, f"exact={exact}/1000 trapezoid_max_diff={worst_trap:.1e}")


def test_criterion_5_graph_features_generalize(study):
    t0 = time.perf_counter()
    flow = [r["auc"] for r in run_ad_generalization(study, FLOW_ONLY).rows]
    both = [r["auc"] for r in run_ad_generalization(study, FLOW_AND_GRAPH).rows]
    elapsed = time.perf_counter() - t0
    ok = all(b >= 0.95 and b > f for b, f in zip(both, flow)) and len(both) == 3 and elapsed < 600
    verdict(5, ok, f"flow+graph={np.round(both, 4).tolist()} flow_only={np.round(flow, 4).tolist()} time={elapsed:.0f}s")
    pins = PINS["criterion_5"]
    np.testing.assert_allclose(both, pins["flow_and_graph"], atol=PIN_TOL)
    np.testing.assert_allclose(flow, pins["flow_only"], atol=PIN_TOL)


def test_criterion_6_overall_ordering(study):
    rows = {r["mode"]: r["auc"] for r in run_overall_comparison(study).rows}
    s, d, dg = rows["single"], rows["dual"], rows["dual_graph"]
    verdict(6, s < d < dg and dg >= 0.90, f"single={s:.4f} dual={d:.4f} dual_graph={dg:.4f}")
    pins = PINS["criterion_6"]
    np.testing.assert_allclose([s, d, dg], [pins["single"], pins["dual"], pins["dual_graph"]], atol=PIN_TOL)


def test_criterion_7_novelty_leave_one_out(study):
    rep = run_novelty_table(study)
    audit_ok = all(r["attack"] not in r["train_label_audit"] and "benign" not in r["train_label_audit"] for r in rep.rows)
    prevalence_ok = all(r["prevalence"] <= 0.02 for r in rep.rows)
    recall_ok = all(r["calibration"]["recall"] >= 0.5 for r in rep.rows if r["calibration"]["feasible"])
    avg = rep.average["auc"]
    ok = audit_ok and prevalence_ok and recall_ok and len(rep.rows) >= 4 and avg >= 0.80
    per = " ".join(f"{r['attack']}={r['auc']:.3f}" for r in rep.rows)
    verdict(7, ok, f"classes={len(rep.rows)} average_auc={avg:.4f} audit={audit_ok} recall_floor={recall_ok} [{per}]")
    assert avg == pytest.approx(PINS["criterion_7"]["average_auc"], abs=PIN_TOL)


def _artifacts(seed: int) -> dict:
    """One pass over every stage on a small corpus; returns the serialized outputs."""
    corpus, manifest = generate_corpus(demo_spec(n_flows=2500, seed=seed))
    ds = corpus["net-a"]
    fm, nft = featurize_dataset(ds)
    benign = np.array([lab.is_benign for lab in ds.labels()])
    cfg = TrainConfig(batch_size=64, max_epochs=3, seed=seed)
    ad = fit_autoencoder(fm.values[benign], cfg, fm.columns, {"training_labels": {"benign": int(benign.sum()), "attack": 0}}).model
    nd = fit_autoencoder(fm.values[~benign], cfg, fm.columns, {"training_labels": {"benign": 0, "attack": int((~benign).sum())}}).model
    ad_loss = ad.score(fm.values[benign])
    det_ad = AnomalyDetector(ad, float(np.quantile(ad_loss, 0.9)))
    det_nd = NoveltyDetector(nd, float(np.median(nd.score(fm.values[~benign]))))
    verdicts = [json.dumps(e.to_dict(), sort_keys=True) for e in batch_detect_stream(det_ad, det_nd, ds.records, nft)]
    exp_cfg = ExperimentConfig.from_dict(
        {"ad_train": {"max_epochs": 2}, "nd_train": {"max_epochs": 2}, "holdout_classes": ["worm"], "seed": seed}
    )
    reports = [r.to_json() for r in run_experiment("end_to_end", Study(corpus, exp_cfg))]
    return {
        "corpus": "".join(dumps_dataset(d) for d in corpus.values()) + json.dumps(manifest, sort_keys=True),
        "features": fm.values.tobytes() + nft.to_csv().encode(),
        "models": dumps_model(ad) + dumps_model(nd),
        "verdicts": "\n".join(verdicts),
        "reports": "".join(reports),
    }


def test_criterion_8_determinism():
    a, b = _artifacts(8), _artifacts(8)
    same = {k: a[k] == b[k] for k in a}
    other = _artifacts(9)
    seed_matters = other["models"] != a["models"] and other["corpus"] != a["corpus"]
    ok = all(same.values()) and seed_matters
    verdict(8, ok, " ".join(f"{k}={'identical' if v else 'DIFFERENT'}" for k, v in same.items()))


def test_criterion_9_throughput(corpus):
    ds = corpus["net-a"]
    fm, nft = featurize_dataset(ds)
    arch = build_architecture(fm.shape[1])
    params = fit_autoencoder(fm.values[:1000], TrainConfig(batch_size=64, max_epochs=1)).model.normalization
    models = []
    for seed in (0, 1):
        w, b = init_params(arch, seed)
        models.append(AEModel(arch, tuple(w), tuple(b), params, fm.columns, {}))
    # every row passes the gate so both autoencoders score every flow
    ad, nd = AnomalyDetector(models[0], -1.0), NoveltyDetector(models[1], 0.01)
    records = list(ds.records)
    best = 0.0
    for _ in range(3):
        t0 = time.perf_counter()
        n = sum(1 for _ in batch_detect_stream(ad, nd, records, nft, batch_size=256))
        best = max(best, n / (time.perf_counter() - t0))
    verdict(9, best >= 50_000, f"{best:,.0f} flows/s over {len(records)} flows (batch 256, both autoencoders)")
