"""Experiment protocols over labelled multi-network flow corpora.

All protocols share one :class:`Study`, which featurises every network once
(graph built over that network's full flow set), splits benign and attack
rows deterministically, and caches trained models so the single-AE, dual and
dual+graph comparisons see identical splits.

Normalisation follows the per-network scheme by default: every network is
min-max scaled with parameters fitted on its own benign training rows, and
the malicious rows of a network use that network's parameters. The novelty
detector always uses one parameter set fitted on its own training rows.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import zlib
from dataclasses import dataclass, field, replace

import numpy as np

from . import REPORT_FORMAT_VERSION
from . import metrics as M
from .detectors import (
    AnomalyDetector,
    NoveltyDetector,
    calibrate_threshold_supervised,
    calibrate_threshold_unsupervised,
)
from .errors import InsufficientData, LabelContamination
from .features import FLOW_AND_GRAPH, FLOW_ONLY, featurize_dataset, schema_for
from .flows import split_indices
from .neural import NormalizationParams, TrainConfig, build_architecture, fit_normalizer, normalize, train

logger = logging.getLogger(__name__)

EXPERIMENT_BATCH_SIZE = 64
E2E_SCORE_RULE = "score = nd_loss if ad_loss > tau_ad else -(tau_ad - ad_loss)"


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 42
    train_fraction: float = 0.7
    # smaller batches than the TrainConfig default: a single network's benign
    # split is ~10k rows, too few 256-row steps to converge in 50 epochs
    ad_train: TrainConfig = TrainConfig(batch_size=EXPERIMENT_BATCH_SIZE)
    nd_train: TrainConfig = TrainConfig(batch_size=EXPERIMENT_BATCH_SIZE)
    normalization: str = "per_network"  # or "pooled"
    holdout_prevalence: float = 0.015
    recall_floor: float = 0.5
    ad_calibration: str = "quantile"  # or "supervised"
    ad_quantile: float = 0.995
    calibration_fraction: float = 0.3
    holdout_classes: tuple[str, ...] | None = None
    baseline_known: tuple[str, ...] = ("scanning", "interrogation", "command_control")
    baseline_holdout: str = "exfiltration"
    networks: tuple[str, ...] | None = None
    histogram_bins: int = 50

    def __post_init__(self):
        if self.normalization not in ("per_network", "pooled"):
            raise ValueError("normalization must be 'per_network' or 'pooled'")
        if self.ad_calibration not in ("quantile", "supervised"):
            raise ValueError("ad_calibration must be 'quantile' or 'supervised'")
        if not 0 < self.holdout_prevalence < 1:
            raise ValueError("holdout_prevalence must be in (0, 1)")
        if not 0 < self.calibration_fraction < 1:
            raise ValueError("calibration_fraction must be in (0, 1)")

    @classmethod
    def from_dict(cls, obj: dict | None) -> ExperimentConfig:
        obj = dict(obj or {})
        unknown = set(obj) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown experiment field(s): {', '.join(sorted(unknown))}")
        for key in ("ad_train", "nd_train"):
            if key in obj:
                # partial overrides apply on top of the experiment defaults
                base = cls.__dataclass_fields__[key].default.to_dict()
                obj[key] = TrainConfig.from_dict({**base, **(obj[key] or {})})
        for key in ("holdout_classes", "baseline_known", "networks"):
            if obj.get(key) is not None:
                obj[key] = tuple(obj[key])
        return cls(**obj)

    def to_dict(self) -> dict:
        out = {}
        for k in self.__dataclass_fields__:
            v = getattr(self, k)
            out[k] = v.to_dict() if isinstance(v, TrainConfig) else (list(v) if isinstance(v, tuple) else v)
        return out


def _sub_seed(seed: int, *names) -> int:
    key = [seed] + [zlib.crc32(str(n).encode()) for n in names]
    return int(np.random.SeedSequence(key).generate_state(1)[0])


@dataclass
class ExperimentReport:
    name: str
    rows: list[dict]
    average: dict | None = None
    config: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "report_format": REPORT_FORMAT_VERSION,
            "experiment": self.name,
            "notes": self.notes,
            "rows": self.rows,
            "average": self.average,
            "config": self.config,
            "extra": self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        key = "attack" if self.rows and "attack" in self.rows[0] else ("mode" if self.rows and "mode" in self.rows[0] else None)
        cols = [key] if key else []
        cols += [c for c in ("networks", "auc", "precision", "recall") if any(c in r for r in self.rows)]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in self.rows:
            w.writerow([_fmt(r.get(c)) for c in cols])
        if self.average:
            w.writerow(["average"] + [_fmt(self.average.get(c)) for c in cols[1:]])
        return buf.getvalue()


def _fmt(v):
    return f"{v:.6f}" if isinstance(v, float) else ("" if v is None else str(v))


def class_average(rows: list[dict], keys=("auc", "precision", "recall")) -> dict:
    """Unweighted mean over classes."""
    return {k: float(np.mean([r[k] for r in rows])) for k in keys}


# -- data preparation ------------------------------------------------------


@dataclass
class _Network:
    network_id: str
    features: np.ndarray  # full-width raw feature rows
    labels: np.ndarray  # "benign" or attack class
    benign_train: np.ndarray
    benign_test: np.ndarray


class Study:
    """Featurised corpus plus cached splits and models for one configuration."""

    def __init__(self, corpus: dict, cfg: ExperimentConfig = ExperimentConfig()):
        self.cfg = cfg
        order = cfg.networks or tuple(corpus)
        missing = [n for n in order if n not in corpus]
        if missing:
            raise KeyError(f"networks not in corpus: {missing}")
        self.networks: dict[str, _Network] = {}
        for nid in order:
            ds = corpus[nid]
            fm, _ = featurize_dataset(ds, FLOW_AND_GRAPH, seed=cfg.seed)
            labels = np.array([str(r.label) for r in ds.records])
            if np.any(labels == "unlabeled"):
                raise LabelContamination(f"network {nid} contains unlabeled rows")
            benign = np.flatnonzero(labels == "benign")
            tr, te = split_indices(len(benign), cfg.train_fraction, _sub_seed(cfg.seed, "benign-split", nid))
            self.networks[nid] = _Network(nid, fm.values, labels, benign[tr], benign[te])
        self.order = tuple(order)
        all_labels = np.concatenate([n.labels for n in self.networks.values()])
        self.attack_classes = tuple(sorted(set(all_labels.tolist()) - {"benign"}))
        self._attack_split = self._split_attacks()
        self._cache: dict = {}

    # pooled attack rows: (network, row) references split per class
    def _split_attacks(self) -> dict:
        out = {}
        for cls in self.attack_classes:
            refs = [(nid, i) for nid in self.order for i in np.flatnonzero(self.networks[nid].labels == cls)]
            tr, te = split_indices(len(refs), self.cfg.train_fraction, _sub_seed(self.cfg.seed, "attack-split", cls))
            out[cls] = ([refs[i] for i in tr], [refs[i] for i in te], refs)
        return out

    @staticmethod
    def columns(mode: str) -> np.ndarray:
        return np.arange(len(schema_for(mode)))

    def raw(self, nid: str, idx, mode: str) -> np.ndarray:
        return self.networks[nid].features[np.asarray(idx, dtype=np.int64)][:, self.columns(mode)]

    def raw_refs(self, refs, mode: str) -> np.ndarray:
        cols = self.columns(mode)
        if not refs:
            return np.zeros((0, len(cols)))
        return np.vstack([self.networks[nid].features[i, cols] for nid, i in refs])

    def labels_of(self, refs) -> np.ndarray:
        return np.array([self.networks[nid].labels[i] for nid, i in refs])

    def benign_params(self, nid: str, mode: str) -> NormalizationParams:
        key = ("benign-params", nid, mode)
        if key not in self._cache:
            self._cache[key] = fit_normalizer(self.raw(nid, self.networks[nid].benign_train, mode))
        return self._cache[key]

    def params_for(self, nid: str, mode: str, train_nets) -> NormalizationParams:
        if self.cfg.normalization == "per_network":
            return self.benign_params(nid, mode)
        key = ("pooled-params", tuple(train_nets), mode)
        if key not in self._cache:
            rows = np.vstack([self.raw(n, self.networks[n].benign_train, mode) for n in train_nets])
            self._cache[key] = fit_normalizer(rows)
        return self._cache[key]

    def normalized_refs(self, refs, mode: str, train_nets) -> np.ndarray:
        """Rows normalised with their own network's AD parameters."""
        cols = len(self.columns(mode))
        out = np.zeros((len(refs), cols))
        by_net: dict[str, list[int]] = {}
        for k, (nid, _) in enumerate(refs):
            by_net.setdefault(nid, []).append(k)
        for nid, ks in by_net.items():
            rows = self.raw(nid, [refs[k][1] for k in ks], mode)
            out[ks] = normalize(rows, self.params_for(nid, mode, train_nets))
        return out

    def benign_refs(self, which: str, nets=None) -> list[tuple[str, int]]:
        nets = nets or self.order
        attr = "benign_train" if which == "train" else "benign_test"
        return [(nid, int(i)) for nid in nets for i in getattr(self.networks[nid], attr)]

    # -- models --

    def anomaly_model(self, mode: str, train_nets=None):
        train_nets = tuple(train_nets or self.order)
        key = ("ad", mode, train_nets)
        if key not in self._cache:
            refs = self.benign_refs("train", train_nets)
            audit = set(self.labels_of(refs).tolist())
            if audit != {"benign"}:
                raise LabelContamination(f"anomaly training rows carry labels {sorted(audit)}")
            x = self.normalized_refs(refs, mode, train_nets)
            cfg = replace(self.cfg.ad_train, seed=_sub_seed(self.cfg.seed, "ad", mode, *train_nets))
            result = train(build_architecture(x.shape[1]), x, cfg, self.params_for(train_nets[0], mode, train_nets), schema_for(mode))
            model = result.model.with_metadata(role="ad", training_labels={"benign": len(refs), "attack": 0})
            self._cache[key] = model
        return self._cache[key]

    def novelty_model(self, mode: str, known: tuple[str, ...]):
        key = ("nd", mode, known)
        if key not in self._cache:
            refs = [r for cls in known for r in self._attack_split[cls][0]]
            labels = self.labels_of(refs)
            raw = self.raw_refs(refs, mode)
            params = fit_normalizer(raw)
            cfg = replace(self.cfg.nd_train, seed=_sub_seed(self.cfg.seed, "nd", mode, *known))
            result = train(build_architecture(raw.shape[1]), normalize(raw, params), cfg, params, schema_for(mode))
            model = result.model.with_metadata(
                role="novelty",
                known_classes=list(known),
                training_labels={"benign": int(np.sum(labels == "benign")), "attack": len(refs)},
            )
            self._cache[key] = (model, labels)
        return self._cache[key]

    def single_model(self, mode: str, known: tuple[str, ...], nets=None):
        """One AE over benign and known-attack training rows (per-network parameters fitted on those rows)."""
        nets = tuple(nets or self.order)
        key = ("single", mode, known, nets)
        if key not in self._cache:
            refs = self.benign_refs("train", nets) + [r for cls in known for r in self._attack_split[cls][0] if r[0] in nets]
            if self.cfg.normalization == "per_network":
                params = {nid: fit_normalizer(self.raw(nid, [i for n, i in refs if n == nid], mode)) for nid in nets}
            else:
                shared = fit_normalizer(self.raw_refs(refs, mode))
                params = {nid: shared for nid in nets}
            x = self._normalize_with(refs, mode, params)
            cfg = replace(self.cfg.ad_train, seed=_sub_seed(self.cfg.seed, "single", mode, *known, *nets))
            result = train(build_architecture(x.shape[1]), x, cfg, params[nets[0]], schema_for(mode))
            self._cache[key] = (result.model, params)
        return self._cache[key]

    def _normalize_with(self, refs, mode, params: dict) -> np.ndarray:
        """Rows scaled with the per-network parameter sets in ``params``."""
        out = np.zeros((len(refs), len(self.columns(mode))))
        by_net: dict[str, list[int]] = {}
        for k, (nid, _) in enumerate(refs):
            by_net.setdefault(nid, []).append(k)
        for nid, ks in by_net.items():
            out[ks] = normalize(self.raw(nid, [refs[k][1] for k in ks], mode), params[nid])
        return out

    # -- evaluation pools --

    def holdout_sample(self, holdout: str, n_other: int, tag: str) -> list[tuple[str, int]]:
        """Holdout rows so that they make up ``holdout_prevalence`` of the pool."""
        refs = self._attack_split[holdout][2]
        p = self.cfg.holdout_prevalence
        want = int(round(p / (1.0 - p) * n_other))
        want = max(1, min(want, len(refs)))
        rng = np.random.default_rng(_sub_seed(self.cfg.seed, "holdout-sample", holdout, tag))
        pick = np.sort(rng.choice(len(refs), want, replace=False))
        return [refs[i] for i in pick]

    def calibration_split(self, refs, groups: np.ndarray, tag: str):
        """Stratified split of a pool into (calibration, evaluation) index arrays."""
        cal, ev = [], []
        for g in sorted(set(groups.tolist())):
            idx = np.flatnonzero(groups == g)
            if len(idx) == 1:
                ev.extend(idx.tolist())
                continue
            c, e = split_indices(len(idx), self.cfg.calibration_fraction, _sub_seed(self.cfg.seed, "cal-split", tag, g))
            cal.extend(idx[c].tolist())
            ev.extend(idx[e].tolist())
        return np.array(sorted(cal), dtype=np.int64), np.array(sorted(ev), dtype=np.int64)

    def known_test_refs(self, known) -> list[tuple[str, int]]:
        return [r for cls in known for r in self._attack_split[cls][1]]


def _check_classes(study: Study, classes) -> None:
    missing = [c for c in classes if c not in study.attack_classes]
    if missing:
        raise InsufficientData(f"attack classes absent from corpus: {missing}")


# -- protocols ---------------------------------------------------------------


def run_single_ae_baseline(study: Study, mode: str = FLOW_ONLY) -> ExperimentReport:
    """(a) benign-trained AE on benign vs malicious; (b) benign+3-known AE on holdout-vs-rest."""
    cfg = study.cfg
    if len(study.attack_classes) < 2:
        raise InsufficientData("baseline needs at least two attack classes")
    primary = study.order[0]
    net = study.networks[primary]
    known = tuple(cfg.baseline_known)
    _check_classes(study, known + (cfg.baseline_holdout,))

    ad = study.anomaly_model(mode, (primary,))
    params = study.benign_params(primary, mode)
    attacks = np.flatnonzero(net.labels != "benign")
    x = normalize(study.raw(primary, np.r_[net.benign_test, attacks], mode), params)
    y = np.r_[np.zeros(len(net.benign_test)), np.ones(len(attacks))]
    loss_a = ad.score_normalized(x)
    auc_a = M.roc_auc(loss_a, y)
    hist_a = M.histogram(loss_a, np.where(y == 1, "malicious", "benign"), cfg.histogram_bins)

    model_b, params_b = study.single_model(mode, known, (primary,))
    test_refs = study.benign_refs("test", (primary,)) + [r for r in study.known_test_refs(known) if r[0] == primary]
    hold_refs = [r for r in study._attack_split[cfg.baseline_holdout][2] if r[0] == primary]
    refs = test_refs + hold_refs
    xb = study._normalize_with(refs, mode, params_b)
    yb = np.r_[np.zeros(len(test_refs)), np.ones(len(hold_refs))]
    loss_b = model_b.score_normalized(xb)
    auc_b = M.roc_auc(loss_b, yb)
    groups = np.where(yb == 1, "holdout", study.labels_of(refs))
    hist_b = M.histogram(loss_b, groups, cfg.histogram_bins)

    rows = [
        {"baseline": "benign_vs_malicious", "auc": auc_a, "network": primary},
        {"baseline": "novel_vs_known", "auc": auc_b, "network": primary, "known": list(known), "holdout": cfg.baseline_holdout},
    ]
    return ExperimentReport(
        "baseline_single",
        rows,
        config={**cfg.to_dict(), "feature_mode": mode},
        extra={"histograms": {"benign_vs_malicious": hist_a, "novel_vs_known": hist_b}},
    )


def run_ad_generalization(study: Study, mode: str = FLOW_AND_GRAPH) -> ExperimentReport:
    """Train the AD on benign rows of the first 1..K networks; evaluate on every network's
    benign test rows plus the first network's malicious rows."""
    if len(study.order) < 3:
        raise InsufficientData("AD generalisation needs at least three networks")
    primary = study.order[0]
    malicious = [(primary, int(i)) for i in np.flatnonzero(study.networks[primary].labels != "benign")]
    if not malicious:
        raise InsufficientData(f"network {primary} has no malicious rows")
    benign = study.benign_refs("test")
    rows, curves = [], {}
    for k in range(1, len(study.order) + 1):
        train_nets = study.order[:k]
        model = study.anomaly_model(mode, train_nets)
        x = study.normalized_refs(benign + malicious, mode, train_nets)
        y = np.r_[np.zeros(len(benign)), np.ones(len(malicious))]
        loss = model.score_normalized(x)
        per_net = {}
        for nid in study.order:
            mask = np.array([r[0] == nid for r in benign] + [True] * len(malicious))
            per_net[nid] = M.roc_auc(loss[mask], y[mask])
        rows.append({"networks": k, "train_networks": list(train_nets), "auc": M.roc_auc(loss, y), "auc_by_network": per_net})
        curves[str(k)] = M.roc_curve(loss, y)
    return ExperimentReport(
        "ad_generalization",
        rows,
        config={**study.cfg.to_dict(), "feature_mode": mode, "malicious_network": primary},
        extra={"roc_curves": curves},
    )


def _nd_calibrate(losses, labels, floor) -> dict:
    if labels.any() and not labels.all():
        return calibrate_threshold_supervised(losses, labels, floor).to_dict()
    # one class only among calibration rows: flag everything above the largest known loss
    tau = float(np.max(losses)) if losses.size else 0.0
    return {"threshold": tau, "precision": 0.0, "recall": 0.0, "candidates": 0, "feasible": False}


def run_novelty_loo(study: Study, holdout: str, known=None, mode: str = FLOW_AND_GRAPH) -> dict:
    """Leave-one-attack-out novelty evaluation of the ND on attack rows only."""
    known = tuple(sorted(known if known is not None else (c for c in study.attack_classes if c != holdout)))
    if holdout in known:
        raise ValueError("holdout class must not be among the known classes")
    _check_classes(study, known + (holdout,))
    model, train_labels = study.novelty_model(mode, known)
    if holdout in set(train_labels.tolist()) or "benign" in set(train_labels.tolist()):
        raise LabelContamination(f"novelty training rows include {holdout!r} or benign rows")

    known_refs = study.known_test_refs(known)
    hold_refs = study.holdout_sample(holdout, len(known_refs), f"loo-{mode}")
    refs = known_refs + hold_refs
    y = np.r_[np.zeros(len(known_refs), bool), np.ones(len(hold_refs), bool)]
    loss = model.score(study.raw_refs(refs, mode))
    cal, ev = study.calibration_split(refs, y.astype(int), f"loo-{holdout}-{mode}")
    calib = _nd_calibrate(loss[cal], y[cal], study.cfg.recall_floor)
    pred = loss[ev] > calib["threshold"]
    pr = M.precision_recall(pred, y[ev])
    return {
        "attack": holdout,
        "auc": M.roc_auc(loss[ev], y[ev]),
        "precision": pr.precision,
        "recall": pr.recall,
        "degenerate": list(pr.degenerate),
        "calibration": calib,
        "n_eval": int(ev.size),
        "n_holdout_eval": int(y[ev].sum()),
        "prevalence": float(y.mean()),
        "train_label_audit": sorted(set(train_labels.tolist())),
    }


def run_novelty_table(study: Study, mode: str = FLOW_AND_GRAPH, classes=None) -> ExperimentReport:
    classes = tuple(classes or study.cfg.holdout_classes or study.attack_classes)
    _check_classes(study, classes)
    rows = [run_novelty_loo(study, h, mode=mode) for h in classes]
    return ExperimentReport("novelty_loo", rows, class_average(rows), {**study.cfg.to_dict(), "feature_mode": mode})


def _e2e_pool(study: Study, holdout: str, known):
    benign = study.benign_refs("test")
    known_refs = study.known_test_refs(known)
    hold = study.holdout_sample(holdout, len(benign) + len(known_refs), "e2e")
    refs = benign + known_refs + hold
    groups = np.array([0] * len(benign) + [1] * len(known_refs) + [2] * len(hold))
    return refs, groups


def run_end_to_end(study: Study, holdout: str, mode: str = FLOW_AND_GRAPH) -> dict:
    """Full AD -> ND pipeline; NovelThreat verdicts scored against the holdout class,
    AD-rejected holdout rows counted as misses."""
    cfg = study.cfg
    known = tuple(c for c in study.attack_classes if c != holdout)
    _check_classes(study, (holdout,))
    ad_model = study.anomaly_model(mode)
    nd_model, train_labels = study.novelty_model(mode, known)
    if holdout in set(train_labels.tolist()):
        raise LabelContamination(f"novelty training rows include holdout {holdout!r}")
    # the detector wrappers audit the training-label metadata of both models
    AnomalyDetector(ad_model, 0.0)
    NoveltyDetector(nd_model, 0.0, known)

    refs, groups = _e2e_pool(study, holdout, known)
    cal, ev = study.calibration_split(refs, groups, f"e2e-{holdout}")

    # AD sees rows scaled with their own network's parameters
    raw = study.raw_refs(refs, mode)
    ad_loss = ad_model.score_normalized(study.normalized_refs(refs, mode, study.order))

    cal_benign = cal[groups[cal] == 0]
    if cfg.ad_calibration == "quantile":
        tau_ad = calibrate_threshold_unsupervised(ad_loss[cal_benign], cfg.ad_quantile)
        ad_calib = {"threshold": tau_ad, "mode": "quantile", "quantile": cfg.ad_quantile}
    else:
        res = calibrate_threshold_supervised(ad_loss[cal], groups[cal] > 0, cfg.recall_floor)
        tau_ad = res.threshold
        ad_calib = {**res.to_dict(), "mode": "supervised"}

    # ND re-normalises the raw rows of everything the AD flagged
    gated = ad_loss > tau_ad
    nd_loss = np.full(len(refs), np.nan)
    if gated.any():
        nd_loss[gated] = nd_model.score(raw[gated])

    is_novel = groups == 2
    cal_g = cal[gated[cal]]
    nd_calib = _nd_calibrate(nd_loss[cal_g], is_novel[cal_g], cfg.recall_floor)
    tau_nd = nd_calib["threshold"]

    verdict_novel = gated & (np.nan_to_num(nd_loss, nan=-np.inf) > tau_nd)
    score = np.where(gated, np.nan_to_num(nd_loss), -(tau_ad - ad_loss))
    pr = M.precision_recall(verdict_novel[ev], is_novel[ev])
    conf = M.confusion(verdict_novel[ev], is_novel[ev])
    return {
        "attack": holdout,
        "auc": M.roc_auc(score[ev], is_novel[ev]),
        "precision": pr.precision,
        "recall": pr.recall,
        "degenerate": list(pr.degenerate),
        "confusion": conf,
        "ad_rejected_novel": int(np.sum(~gated[ev] & is_novel[ev])),
        "benign_flagged_novel": int(np.sum(verdict_novel[ev] & (groups[ev] == 0))),
        "ad_threshold": ad_calib,
        "nd_threshold": nd_calib,
        "n_eval": int(ev.size),
        "n_holdout_eval": int(is_novel[ev].sum()),
        "prevalence": float(is_novel.mean()),
    }


def run_end_to_end_table(study: Study, mode: str = FLOW_AND_GRAPH, classes=None) -> ExperimentReport:
    classes = tuple(classes or study.cfg.holdout_classes or study.attack_classes)
    _check_classes(study, classes)
    rows = [run_end_to_end(study, h, mode) for h in classes]
    return ExperimentReport(
        "end_to_end",
        rows,
        class_average(rows),
        {**study.cfg.to_dict(), "feature_mode": mode},
        notes=[f"E2E AUC ranking: {E2E_SCORE_RULE}"],
    )


def run_single_novelty(study: Study, holdout: str, mode: str = FLOW_ONLY) -> dict:
    """Single AE over benign + known attacks; holdout class vs everything else."""
    known = tuple(c for c in study.attack_classes if c != holdout)
    model, params = study.single_model(mode, known)
    refs, groups = _e2e_pool(study, holdout, known)
    cal, ev = study.calibration_split(refs, groups, f"e2e-{holdout}")
    loss = model.score_normalized(study._normalize_with(refs, mode, params))
    is_novel = groups == 2
    calib = _nd_calibrate(loss[cal], is_novel[cal], study.cfg.recall_floor)
    pr = M.precision_recall(loss[ev] > calib["threshold"], is_novel[ev])
    return {
        "attack": holdout,
        "auc": M.roc_auc(loss[ev], is_novel[ev]),
        "precision": pr.precision,
        "recall": pr.recall,
        "threshold": calib,
    }


def run_overall_comparison(study: Study, classes=None) -> ExperimentReport:
    """Class-averaged single AE (flow only) vs dual (flow only) vs dual with graph features."""
    classes = tuple(classes or study.cfg.holdout_classes or study.attack_classes)
    _check_classes(study, classes)
    per_mode = {
        "single": [run_single_novelty(study, h, FLOW_ONLY) for h in classes],
        "dual": [run_end_to_end(study, h, FLOW_ONLY) for h in classes],
        "dual_graph": [run_end_to_end(study, h, FLOW_AND_GRAPH) for h in classes],
    }
    rows = [{"mode": m, **class_average(r)} for m, r in per_mode.items()]
    per_class = {m: [{k: r[k] for k in ("attack", "auc", "precision", "recall")} for r in rs] for m, rs in per_mode.items()}
    return ExperimentReport(
        "overall_comparison",
        rows,
        config=study.cfg.to_dict(),
        notes=[f"E2E AUC ranking: {E2E_SCORE_RULE}", "single = one AE on benign + known attacks, flow-only features"],
        extra={"per_class": per_class},
    )


EXPERIMENTS = ("baseline_single", "ad_generalization", "novelty_loo", "end_to_end", "overall_comparison")


def run_experiment(name: str, study: Study, mode: str | None = None) -> list[ExperimentReport]:
    if name == "baseline_single":
        return [run_single_ae_baseline(study, mode or FLOW_ONLY)]
    if name == "ad_generalization":
        modes = (mode,) if mode else (FLOW_ONLY, FLOW_AND_GRAPH)
        return [run_ad_generalization(study, m) for m in modes]
    if name == "novelty_loo":
        return [run_novelty_table(study, mode or FLOW_AND_GRAPH)]
    if name == "end_to_end":
        return [run_end_to_end_table(study, mode or FLOW_AND_GRAPH)]
    if name == "overall_comparison":
        return [run_overall_comparison(study)]
    raise ValueError(f"unknown experiment {name!r}; expected one of {EXPERIMENTS}")
