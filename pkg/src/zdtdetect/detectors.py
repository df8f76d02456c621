"""Threshold calibration and the two-stage anomaly / novelty workflow."""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .errors import InsufficientData, NoFeasibleThreshold, SchemaMismatch, ZDTError
from .features import FLOW_AND_GRAPH, FLOW_ONLY, FeatureMatrix, NodeFeatureTable, featurize, schema_for
from .flows import COLUMNS, FlowRecord, parse_flow_record
from .neural import AEModel, normalize

BENIGN = "benign"
KNOWN_ATTACK = "known_attack"
NOVEL_THREAT = "novel_threat"
VERDICTS = (BENIGN, KNOWN_ATTACK, NOVEL_THREAT)


def calibrate_threshold_unsupervised(benign_val_losses, quantile: float = 0.995, min_values: int = 20) -> float:
    """Empirical quantile, linear between order statistics placed at (k - 0.5) / n."""
    losses = np.asarray(benign_val_losses, dtype=np.float64)
    if losses.size < max(1, min_values):
        raise InsufficientData(f"need at least {min_values} benign validation losses, got {losses.size}")
    if not 0 < quantile < 1:
        raise ValueError("quantile must be in (0, 1)")
    return float(np.quantile(losses, quantile, method="hazen"))


@dataclass(frozen=True)
class Calibration:
    threshold: float
    precision: float
    recall: float
    n_candidates: int
    feasible: bool = True

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "precision": self.precision,
            "recall": self.recall,
            "candidates": self.n_candidates,
            "feasible": self.feasible,
        }


def calibrate_threshold_supervised(losses, labels, recall_floor: float = 0.5) -> Calibration:
    """Most precise threshold whose recall stays at or above ``recall_floor``.

    A row is predicted positive when its loss is strictly greater than the
    threshold. Candidates are midpoints between consecutive distinct losses.
    Ties on precision prefer higher recall, then the lower threshold. When no
    candidate reaches the floor the recall-maximising threshold is returned
    with ``feasible=False`` and a NoFeasibleThreshold warning.
    """
    s = np.asarray(losses, dtype=np.float64)
    y = np.asarray(labels).astype(bool)
    if s.shape != y.shape:
        raise ValueError("losses and labels must have equal length")
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == y.size:
        raise InsufficientData("supervised calibration needs both classes")

    uniq, inverse = np.unique(s, return_inverse=True)
    pos_at = np.bincount(inverse, weights=y, minlength=uniq.size)
    all_at = np.bincount(inverse, minlength=uniq.size).astype(np.float64)
    # predicted positive for candidate between uniq[i] and uniq[i+1]: all values > uniq[i]
    tp = np.cumsum(pos_at[::-1])[::-1][1:]
    pp = np.cumsum(all_at[::-1])[::-1][1:]
    cand = (uniq[:-1] + uniq[1:]) / 2.0
    if cand.size:
        precision = tp / pp
        recall = tp / n_pos
        ok = recall >= recall_floor
        if ok.any():
            # lexsort: last key is primary; index order already gives "lower threshold first"
            idx = np.flatnonzero(ok)
            order = np.lexsort((idx, -recall[idx], -precision[idx]))
            i = int(idx[order[0]])
            return Calibration(float(cand[i]), float(precision[i]), float(recall[i]), int(cand.size))
        order = np.lexsort((np.arange(cand.size), -precision, -recall))
        i = int(order[0])
        tau, p, r = float(cand[i]), float(precision[i]), float(recall[i])
    else:
        tau = float(np.nextafter(uniq[0], -np.inf))
        p, r = n_pos / y.size, 1.0
    warnings.warn(
        f"no threshold reaches recall {recall_floor}; using recall-maximising threshold {tau!r}",
        NoFeasibleThreshold,
        stacklevel=2,
    )
    return Calibration(tau, p, r, int(cand.size), feasible=False)


@dataclass(frozen=True)
class AnomalyDetector:
    model: AEModel
    threshold: float

    def __post_init__(self):
        if self.model.metadata.get("training_labels", {}).get("attack", 0):
            raise ZDTError("anomaly detector model was trained on attack-labelled rows")


@dataclass(frozen=True)
class NoveltyDetector:
    model: AEModel
    threshold: float
    known_classes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.model.metadata.get("training_labels", {}).get("benign", 0):
            raise ZDTError("novelty detector model was trained on benign rows")


@dataclass(frozen=True)
class Verdict:
    verdict: str
    ad_loss: float
    nd_loss: float | None = None

    def to_dict(self) -> dict:
        out = {"verdict": self.verdict, "ad_loss": self.ad_loss}
        if self.nd_loss is not None:
            out["nd_loss"] = self.nd_loss
        return out


def check_schema(model: AEModel, width: int, columns, role: str) -> None:
    if model.architecture.input_dim != width:
        raise SchemaMismatch(f"{role} model expects {model.architecture.input_dim} features, matrix has {width}")
    if columns is not None and model.columns is not None and tuple(model.columns) != tuple(columns):
        raise SchemaMismatch(f"{role} model feature schema differs from the matrix schema")


def score_pipeline(ad: AnomalyDetector, nd: NoveltyDetector, raw_features) -> tuple[np.ndarray, np.ndarray]:
    """(ad_loss, nd_loss) per row; nd_loss is NaN for rows the AD let through."""
    if isinstance(raw_features, FeatureMatrix):
        x, columns = raw_features.values, raw_features.columns
    else:
        x, columns = np.atleast_2d(np.asarray(raw_features, dtype=np.float64)), None
    check_schema(ad.model, x.shape[1], columns, "anomaly")
    check_schema(nd.model, x.shape[1], columns, "novelty")
    ad_loss = ad.model.score_normalized(normalize(x, ad.model.normalization))
    nd_loss = np.full(x.shape[0], np.nan)
    gated = ad_loss > ad.threshold
    if gated.any():
        # always from the raw rows, never from the AD-normalised ones
        nd_loss[gated] = nd.model.score_normalized(normalize(x[gated], nd.model.normalization))
    return ad_loss, nd_loss


def verdicts_from_losses(ad_loss, nd_loss, nd_threshold: float) -> list[Verdict]:
    out = []
    for a, b in zip(ad_loss.tolist(), nd_loss.tolist()):
        if b != b:  # NaN: not gated
            out.append(Verdict(BENIGN, a))
        else:
            out.append(Verdict(KNOWN_ATTACK if b <= nd_threshold else NOVEL_THREAT, a, b))
    return out


def detect(ad: AnomalyDetector, nd: NoveltyDetector, raw_features) -> list[Verdict]:
    ad_loss, nd_loss = score_pipeline(ad, nd, raw_features)
    return verdicts_from_losses(ad_loss, nd_loss, nd.threshold)


def verdict_counts(verdicts: Iterable) -> dict:
    counts = {v: 0 for v in VERDICTS}
    for v in verdicts:
        name = v.verdict if isinstance(v, Verdict) else v.get("verdict")
        if name in counts:
            counts[name] += 1
    return counts


@dataclass
class StreamEntry:
    index: int
    verdict: Verdict | None
    flags: list[str] = field(default_factory=list)
    latency_s: float = 0.0
    error: str | None = None

    def to_dict(self) -> dict:
        out = {"index": self.index}
        if self.error is not None:
            out["error"] = self.error
        else:
            out.update(self.verdict.to_dict())
        out["flags"] = list(self.flags)
        return out


def mode_for(model: AEModel) -> str:
    return FLOW_ONLY if model.architecture.input_dim == len(schema_for(FLOW_ONLY)) else FLOW_AND_GRAPH


def batch_detect_stream(
    ad: AnomalyDetector,
    nd: NoveltyDetector,
    records: Iterable,
    node_table: NodeFeatureTable | None,
    batch_size: int = 256,
    columns: tuple[str, ...] = COLUMNS,
) -> Iterator[StreamEntry]:
    """Score a record stream in fixed-size chunks, yielding entries in input order.

    Items may be FlowRecord objects or CSV lines laid out as ``columns``;
    rows that fail to parse come out as error entries. Flows with an endpoint
    missing from ``node_table`` get zero graph features and an
    ``unknown_node`` flag. ``latency_s`` is the wall time of the chunk the
    record was scored in.
    """
    mode = mode_for(ad.model)
    if mode == FLOW_AND_GRAPH and node_table is None:
        raise ValueError("a node feature table is required for graph-feature models")

    def flush(buf):
        t0 = time.perf_counter()
        good = [(i, r) for i, r, _ in buf if r is not None]
        results = {}
        if good:
            fm = featurize([r for _, r in good], node_table, mode, on_unknown="zero")
            verdicts = detect(ad, nd, fm)
            unknown = fm.unknown_node if fm.unknown_node is not None else np.zeros(len(good), bool)
            for (i, _), v, u in zip(good, verdicts, unknown.tolist()):
                results[i] = (v, ["unknown_node"] if u else [])
        latency = time.perf_counter() - t0
        for i, r, err in buf:
            if r is None:
                yield StreamEntry(i, None, [], latency, err)
            else:
                v, flags = results[i]
                yield StreamEntry(i, v, flags, latency)

    buf = []
    for i, item in enumerate(records):
        try:
            rec = item if isinstance(item, FlowRecord) else parse_flow_record(item, "csv", columns)
            buf.append((i, rec, None))
        except ZDTError as exc:
            buf.append((i, None, f"{type(exc).__name__}: {exc}"))
        if len(buf) >= batch_size:
            yield from flush(buf)
            buf = []
    if buf:
        yield from flush(buf)
