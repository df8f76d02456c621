"""Command line entry point: ``zdtdetect <command> ...``.

Exit codes: 0 success, 2 configuration, 3 IO, 4 label contamination,
5 training divergence, 6 schema mismatch.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import MODEL_FORMAT_VERSION, REPORT_FORMAT_VERSION, __version__
from . import detectors as D
from . import experiments as X
from . import synth
from .errors import (
    ChecksumMismatch,
    DimensionMismatch,
    LabelContamination,
    NonFiniteLoss,
    SchemaError,
    VersionMismatch,
    ZDTError,
)
from .features import FEATURE_MODES, FLOW_AND_GRAPH, NodeFeatureTable, featurize_dataset, read_feature_csv, schema_for
from .flows import COLUMNS, load_dataset
from .neural import TrainConfig, fit_autoencoder, load_model, save_model

logger = logging.getLogger("zdtdetect")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_LABELS = 4
EXIT_DIVERGENCE = 5
EXIT_SCHEMA = 6


class CommandError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _read_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CommandError(EXIT_IO, f"cannot read {path}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CommandError(EXIT_CONFIG, f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(obj, dict):
        raise CommandError(EXIT_CONFIG, f"{path}: expected a JSON object")
    return obj


def _write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _mode_of(columns) -> str:
    for mode in FEATURE_MODES:
        if tuple(columns) == schema_for(mode):
            return mode
    raise CommandError(EXIT_SCHEMA, f"feature columns match no known schema: {list(columns)[:4]}...")


def _read_labels(path) -> list[str]:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if lines and lines[0] == "label":
        lines = lines[1:]
    return [ln.lower() for ln in lines]


def _load_features(path, labels_path=None):
    fm, labels = read_feature_csv(path)
    if labels_path is not None:
        labels = _read_labels(labels_path)
    if labels is not None and len(labels) != len(fm):
        raise CommandError(EXIT_CONFIG, f"{len(labels)} labels for {len(fm)} feature rows")
    return fm, labels


# -- commands -----------------------------------------------------------------


def cmd_gen(args) -> int:
    spec = _read_json(args.spec) if args.spec else synth.demo_spec().to_dict()
    if args.seed is not None:
        spec["seed"] = args.seed
    try:
        corpus, manifest = synth.generate_corpus(spec)
    except (ValueError, TypeError, KeyError) as exc:
        raise CommandError(EXIT_CONFIG, f"invalid corpus spec: {exc}") from exc
    synth.save_corpus(corpus, manifest, args.out)
    print(json.dumps(manifest, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_featurize(args) -> int:
    ds = load_dataset(args.input)
    for rej in ds.rejected:
        logger.warning("line %d rejected: %s", rej.line, rej.reason)
    fm, nft = featurize_dataset(ds, args.mode, seed=args.seed or 0)
    _write_text(args.out, fm.to_csv(labels=ds.labels()))
    if args.nodes_out:
        if nft is None:
            raise CommandError(EXIT_CONFIG, "--nodes-out needs --mode flow_and_graph")
        _write_text(args.nodes_out, nft.to_csv())
    print(f"{len(fm)} rows x {fm.shape[1]} features -> {args.out}")
    return EXIT_OK


def _train_config(args) -> TrainConfig:
    cfg = _read_json(args.config) if args.config else {}
    cfg = cfg.get("train", cfg)
    try:
        tc = TrainConfig.from_dict(cfg)
    except (ValueError, TypeError) as exc:
        raise CommandError(EXIT_CONFIG, f"invalid training config: {exc}") from exc
    if args.seed is not None:
        tc = TrainConfig.from_dict({**tc.to_dict(), "seed": args.seed})
    return tc


def cmd_train(args) -> int:
    fm, labels = _load_features(args.features)
    mode = _mode_of(fm.columns)
    if labels is None:
        raise LabelContamination("training rows carry no labels; the label audit cannot run")
    labels = np.array(labels)
    if args.role == "ad":
        bad = sorted(set(labels.tolist()) - {"benign"})
        if bad:
            raise LabelContamination(f"anomaly detector input contains non-benign labels {bad}")
        meta = {"role": "ad", "training_labels": {"benign": int(labels.size), "attack": 0}}
    else:
        bad = sorted(set(labels.tolist()) & {"benign", "unlabeled"})
        if bad:
            raise LabelContamination(f"novelty detector input contains {bad} rows")
        meta = {
            "role": "novelty",
            "known_classes": sorted(set(labels.tolist())),
            "training_labels": {"benign": 0, "attack": int(labels.size)},
        }
    tc = _train_config(args)
    result = fit_autoencoder(fm.values, tc, fm.columns, {**meta, "feature_mode": mode})
    digest = save_model(result.model, args.out)
    last = result.history[-1]
    print(
        f"epochs={last['epoch']} train_loss={last['train_loss']:.6g} "
        f"best_val_loss={last['best_val_loss']:.6g} sha256={digest}"
    )
    return EXIT_OK


def cmd_calibrate(args) -> int:
    model = load_model(args.model)
    fm, labels = _load_features(args.features, args.labels)
    D.check_schema(model, fm.shape[1], fm.columns, model.metadata.get("role", "model"))
    losses = model.score(fm.values)
    role = model.metadata.get("role", "ad")
    known = set(model.metadata.get("known_classes", []))
    if labels is not None:
        labels = np.array(labels)
        if role != "ad":
            # the novelty model only ever sees attack traffic
            keep = ~np.isin(labels, ["benign", "unlabeled"])
            losses, labels = losses[keep], labels[keep]
        # rows that should stay below the threshold
        normal = labels == "benign" if role == "ad" else np.isin(labels, list(known))
    else:
        normal = np.ones(len(losses), bool)
    if args.mode == "quantile":
        if not normal.any():
            raise CommandError(EXIT_CONFIG, "no reference rows to take a quantile over")
        tau = D.calibrate_threshold_unsupervised(losses[normal], args.quantile)
        info = {"mode": "quantile", "quantile": args.quantile, "threshold": tau, "rows": int(normal.sum())}
    else:
        if labels is None:
            raise CommandError(EXIT_CONFIG, "supervised calibration needs labels")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            cal = D.calibrate_threshold_supervised(losses, ~normal, args.recall_floor)
        for w in caught:
            logger.warning("%s", w.message)
        tau = cal.threshold
        info = {"mode": "supervised", "recall_floor": args.recall_floor, **cal.to_dict()}
    save_model(model.with_metadata(threshold=tau, calibration=info), args.out)
    print(json.dumps(info, sort_keys=True))
    return EXIT_OK


def _calibrated(path, role: str):
    model = load_model(path)
    if model.threshold is None:
        raise CommandError(EXIT_CONFIG, f"{path}: model has no threshold; run 'calibrate' first")
    if role == "ad":
        return D.AnomalyDetector(model, float(model.threshold))
    return D.NoveltyDetector(model, float(model.threshold), tuple(model.metadata.get("known_classes", ())))


def cmd_detect(args) -> int:
    ad = _calibrated(args.ad, "ad")
    nd = _calibrated(args.nd, "novelty")
    if ad.model.architecture.input_dim != nd.model.architecture.input_dim:
        raise CommandError(EXIT_SCHEMA, "anomaly and novelty models use different feature schemas")
    D.check_schema(nd.model, ad.model.architecture.input_dim, ad.model.columns, "novelty")

    path = Path(args.input)
    with open(path, newline="") as fh:
        header = fh.readline()
        lines = [ln for ln in fh if ln.strip()]
    columns = tuple(h.strip() for h in header.strip().split(","))
    missing = [c for c in COLUMNS if c not in columns]
    if missing:
        raise SchemaError(f"{path}: missing required column(s) {', '.join(missing)}")

    node_table = None
    if D.mode_for(ad.model) == FLOW_AND_GRAPH:
        if args.nodes:
            node_table = NodeFeatureTable.from_csv(Path(args.nodes).read_text())
        else:
            # graph over the input itself, as in batch analysis
            _, node_table = featurize_dataset(load_dataset(path), FLOW_AND_GRAPH, seed=args.seed or 0)

    counts = {v: 0 for v in D.VERDICTS}
    errors = 0
    out_lines = []
    for entry in D.batch_detect_stream(ad, nd, lines, node_table, args.batch_size, columns):
        out_lines.append(json.dumps(entry.to_dict(), sort_keys=True))
        if entry.error is not None:
            errors += 1
        else:
            counts[entry.verdict.verdict] += 1
    summary = {"summary": {**counts, "errors": errors, "rows": len(lines)}}
    out_lines.append(json.dumps(summary, sort_keys=True))
    _write_text(args.out, "\n".join(out_lines) + "\n")
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def _experiment_inputs(args):
    cfg_path = Path(args.config) if args.config else None
    raw = _read_json(cfg_path) if cfg_path else {}
    raw = dict(raw)
    mode = raw.pop("mode", None)
    if mode is not None and mode not in FEATURE_MODES:
        raise CommandError(EXIT_CONFIG, f"mode: expected one of {FEATURE_MODES}")
    corpus_ref = raw.pop("corpus", None)
    corpus_spec = raw.pop("corpus_spec", None)
    if args.seed is not None:
        raw["seed"] = args.seed
    try:
        cfg = X.ExperimentConfig.from_dict(raw)
    except (ValueError, TypeError) as exc:
        raise CommandError(EXIT_CONFIG, f"invalid experiment config: {exc}") from exc
    if corpus_ref is not None:
        base = cfg_path.parent if cfg_path else Path.cwd()
        corpus_dir = Path(corpus_ref) if Path(corpus_ref).is_absolute() else base / corpus_ref
        corpus, _ = synth.load_corpus(corpus_dir)
        source = {"corpus": str(corpus_ref)}
    else:
        spec = corpus_spec if corpus_spec is not None else synth.demo_spec().to_dict()
        try:
            corpus, _ = synth.generate_corpus(spec)
        except (ValueError, TypeError, KeyError) as exc:
            raise CommandError(EXIT_CONFIG, f"invalid corpus spec: {exc}") from exc
        source = {"corpus_spec": spec}
    return corpus, cfg, mode, source


def cmd_experiment(args) -> int:
    corpus, cfg, mode, source = _experiment_inputs(args)
    study = X.Study(corpus, cfg)
    reports = X.run_experiment(args.name, study, mode)
    out = Path(args.out)
    for rep in reports:
        rep.config = {**rep.config, **source}
        stem = rep.name
        if len(reports) > 1 and "feature_mode" in rep.config:
            stem = f"{rep.name}_{rep.config['feature_mode']}"
        _write_text(out / f"{stem}.json", rep.to_json())
        _write_text(out / f"{stem}.csv", rep.to_csv())
        print(rep.to_csv(), end="")
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zdtdetect", description="Dual-autoencoder zero-day flow detector")
    p.add_argument(
        "--version",
        action="version",
        version=f"zdtdetect {__version__} (model format {MODEL_FORMAT_VERSION}, report format {REPORT_FORMAT_VERSION})",
    )
    p.add_argument("--seed", type=int, default=None, help="override the seed of the command's config")
    p.add_argument("-v", "--verbose", action="store_true")
    # --seed is accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate a labelled synthetic corpus")
    g.add_argument("--spec", help="corpus spec JSON (default: built-in 3-network demo)")
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_gen)

    f = sub.add_parser("featurize", parents=[common], help="flow file -> feature matrix CSV")
    f.add_argument("--input", required=True)
    f.add_argument("--mode", choices=FEATURE_MODES, default=FLOW_AND_GRAPH)
    f.add_argument("--out", required=True)
    f.add_argument("--nodes-out", help="also write the node feature table (flow_and_graph only)")
    f.set_defaults(func=cmd_featurize)

    t = sub.add_parser("train", parents=[common], help="train an anomaly (benign) or novelty (attack) autoencoder")
    t.add_argument("--role", choices=("ad", "novelty"), required=True)
    t.add_argument("--features", required=True, help="labelled feature CSV")
    t.add_argument("--config", help="training config JSON")
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    c = sub.add_parser("calibrate", parents=[common], help="set a model's decision threshold")
    c.add_argument("--model", required=True)
    c.add_argument("--features", required=True)
    c.add_argument("--labels", help="label file (one per line); default: the feature CSV's label column")
    c.add_argument("--mode", choices=("quantile", "supervised"), default="quantile")
    c.add_argument("--quantile", type=float, default=0.995)
    c.add_argument("--recall-floor", type=float, default=0.5)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_calibrate)

    d = sub.add_parser("detect", parents=[common], help="score a flow file through both detectors")
    d.add_argument("--ad", required=True)
    d.add_argument("--nd", required=True)
    d.add_argument("--input", required=True)
    d.add_argument("--nodes", help="prebuilt node feature table; default: graph over the input")
    d.add_argument("--batch-size", type=int, default=256)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_detect)

    e = sub.add_parser("experiment", parents=[common], help="run an evaluation protocol")
    e.add_argument("--name", choices=X.EXPERIMENTS, required=True)
    e.add_argument("--config", help="experiment config JSON")
    e.add_argument("--out", required=True, help="report directory")
    e.set_defaults(func=cmd_experiment)
    return p


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, CommandError):
        return exc.code
    if isinstance(exc, LabelContamination):
        return EXIT_LABELS
    if isinstance(exc, NonFiniteLoss):
        return EXIT_DIVERGENCE
    if isinstance(exc, (DimensionMismatch, SchemaError)):
        return EXIT_SCHEMA
    if isinstance(exc, (OSError, ChecksumMismatch, VersionMismatch)):
        return EXIT_IO
    return EXIT_CONFIG


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CommandError, ZDTError, OSError, ValueError, KeyError) as exc:
        code = _exit_code(exc)
        print(f"error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
