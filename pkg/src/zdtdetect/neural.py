"""Dense symmetric autoencoder in numpy.

Hidden layers use ReLU, the output layer is linear. Weights are float32;
losses are accumulated in float64. Scoring multiplies column by column so a
row's reconstruction is bitwise independent of the batch it is scored in.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import MODEL_FORMAT_VERSION
from .errors import (
    ChecksumMismatch,
    DimensionMismatch,
    EmptyMatrix,
    InsufficientData,
    NonFiniteLoss,
    VersionMismatch,
)

logger = logging.getLogger(__name__)

LATENT_WIDTH = 6
WIDTH_DIVISOR = 1.4
MIN_HIDDEN_WIDTH = 9  # encoder widths <= 8 are dropped in favour of the latent layer
ARCH_RULE = "w[k+1]=round(w[k]/1.4), stop before width<=8, latent 6, mirrored decoder"
FILE_MAGIC = "zdtdetect-ae"


def _values(m) -> np.ndarray:
    return np.asarray(getattr(m, "values", m), dtype=np.float64)


@dataclass(frozen=True)
class NormalizationParams:
    min: np.ndarray
    max: np.ndarray

    @property
    def d(self) -> int:
        return int(self.min.shape[0])

    def to_dict(self) -> dict:
        return {"min": [float(v) for v in self.min], "max": [float(v) for v in self.max]}

    @classmethod
    def from_dict(cls, obj) -> NormalizationParams:
        return cls(np.array(obj["min"], dtype=np.float64), np.array(obj["max"], dtype=np.float64))


def fit_normalizer(m) -> NormalizationParams:
    x = _values(m)
    if x.ndim != 2 or x.shape[0] == 0:
        raise EmptyMatrix("cannot fit normalisation on an empty matrix")
    return NormalizationParams(x.min(axis=0), x.max(axis=0))


def normalize(m, p: NormalizationParams) -> np.ndarray:
    """Min-max scale into [0, 1] (clipped); constant features map to 0."""
    x = _values(m)
    if x.ndim != 2 or x.shape[1] != p.d:
        raise DimensionMismatch(f"matrix has {x.shape[-1]} columns, normaliser expects {p.d}")
    span = p.max - p.min
    safe = np.where(span > 0, span, 1.0)
    out = np.where(span > 0, (x - p.min) / safe, 0.0)
    return np.clip(out, 0.0, 1.0)


@dataclass(frozen=True)
class AEArchitecture:
    widths: tuple[int, ...]

    @property
    def input_dim(self) -> int:
        return self.widths[0]

    @property
    def latent(self) -> int:
        return self.widths[len(self.widths) // 2]

    @property
    def encoder(self) -> tuple[int, ...]:
        return self.widths[: len(self.widths) // 2]

    @property
    def decoder(self) -> tuple[int, ...]:
        return self.widths[len(self.widths) // 2 + 1 :]

    @property
    def n_layers(self) -> int:
        return len(self.widths) - 1


def build_architecture(input_dim: int) -> AEArchitecture:
    if input_dim < 1:
        raise ValueError("input_dim must be >= 1")
    encoder = [input_dim]
    while True:
        nxt = int(round(encoder[-1] / WIDTH_DIVISOR))
        if nxt < MIN_HIDDEN_WIDTH:
            break
        encoder.append(nxt)
    return AEArchitecture(tuple(encoder) + (LATENT_WIDTH,) + tuple(reversed(encoder)))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 256
    max_epochs: int = 50
    patience: int = 5
    validation_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size <= 0 or self.max_epochs <= 0 or self.patience <= 0:
            raise ValueError("learning_rate, batch_size, max_epochs and patience must be positive")
        if not 0 < self.validation_fraction < 1:
            raise ValueError("validation_fraction must be in (0, 1)")

    @classmethod
    def from_dict(cls, obj: dict | None) -> TrainConfig:
        obj = dict(obj or {})
        unknown = set(obj) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown TrainConfig field(s): {', '.join(sorted(unknown))}")
        return cls(**obj)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def reconstruction_loss(x, x_hat) -> np.ndarray:
    """Per-row mean squared error, accumulated in float64."""
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(x_hat, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape {a.shape} != {b.shape}")
    if a.ndim == 1:
        return np.mean((a - b) ** 2)
    return np.mean((a - b) ** 2, axis=1)


@dataclass(frozen=True)
class AEModel:
    architecture: AEArchitecture
    weights: tuple[np.ndarray, ...]  # layer k: (widths[k], widths[k+1])
    biases: tuple[np.ndarray, ...]
    normalization: NormalizationParams
    columns: tuple[str, ...] | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        w = self.architecture.widths
        if len(self.weights) != len(w) - 1 or len(self.biases) != len(w) - 1:
            raise DimensionMismatch("layer count does not match architecture")
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.shape != (w[k], w[k + 1]) or b.shape != (w[k + 1],):
                raise DimensionMismatch(f"layer {k} shapes {W.shape}/{b.shape} do not match widths")
        if self.normalization.d != w[0]:
            raise DimensionMismatch("normalisation dimension does not match input width")

    @property
    def threshold(self) -> float | None:
        return self.metadata.get("threshold")

    def with_metadata(self, **updates) -> AEModel:
        return replace(self, metadata={**self.metadata, **updates})

    def with_normalization(self, params: NormalizationParams) -> AEModel:
        return replace(self, normalization=params)

    def forward(self, x) -> np.ndarray:
        return forward(self, x)

    def score_normalized(self, x_norm) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x_norm, dtype=np.float32))
        return reconstruction_loss(x, forward(self, x))

    def score(self, raw) -> np.ndarray:
        """Reconstruction loss of raw (un-normalised) feature rows."""
        return self.score_normalized(normalize(np.atleast_2d(_values(raw)), self.normalization))


def forward(model: AEModel, x) -> np.ndarray:
    x = np.asarray(x)
    single = x.ndim == 1
    h = np.atleast_2d(x).astype(np.float32)
    if h.shape[1] != model.architecture.input_dim:
        raise DimensionMismatch(f"input has {h.shape[1]} features, model expects {model.architecture.input_dim}")
    # column-at-a-time accumulation keeps every row's arithmetic independent of
    # the batch it arrives in (BLAS blocking would not); rows run along axis 1
    hT = np.ascontiguousarray(h.T)
    last = len(model.weights) - 1
    for k, (W, b) in enumerate(zip(model.weights, model.biases)):
        out = np.repeat(b[:, None], hT.shape[1], axis=1)
        tmp = np.empty_like(out)
        for j in range(W.shape[0]):
            np.multiply(W[j][:, None], hT[j], out=tmp)
            out += tmp
        hT = out if k == last else np.maximum(out, 0.0, out=out)
    h = hT.T
    return h[0] if single else h


# -- training -------------------------------------------------------------


def init_params(arch: AEArchitecture, seed: int, dtype=np.float32):
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(arch.widths[:-1], arch.widths[1:]):
        limit = math.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)).astype(dtype))
        biases.append(np.zeros(fan_out, dtype=dtype))
    return weights, biases


def _fast_forward(weights, biases, x):
    acts = [x]
    pre = []
    h = x
    last = len(weights) - 1
    for k, (W, b) in enumerate(zip(weights, biases)):
        z = h @ W + b
        pre.append(z)
        h = z if k == last else np.maximum(z, 0)
        acts.append(h)
    return acts, pre


def loss_and_grads(weights, biases, x):
    """Mean squared reconstruction error over all entries and its gradients."""
    acts, pre = _fast_forward(weights, biases, x)
    out = acts[-1]
    diff = out - x
    loss = float(np.mean(np.square(diff, dtype=np.float64)))
    delta = (2.0 / diff.size) * diff
    gw = [None] * len(weights)
    gb = [None] * len(weights)
    for k in range(len(weights) - 1, -1, -1):
        gw[k] = acts[k].T @ delta
        gb[k] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ weights[k].T) * (pre[k - 1] > 0)
    return loss, gw, gb


def _mean_loss(weights, biases, x, chunk=8192) -> float:
    total = 0.0
    for i in range(0, x.shape[0], chunk):
        xb = x[i : i + chunk]
        acts, _ = _fast_forward(weights, biases, xb)
        total += float(np.sum(np.square(acts[-1] - xb, dtype=np.float64)))
    return total / x.size


@dataclass
class TrainResult:
    model: AEModel
    history: list[dict]

    @property
    def best_val_loss(self) -> float:
        return min(h["val_loss"] for h in self.history)


def train(
    arch: AEArchitecture,
    data,
    cfg: TrainConfig = TrainConfig(),
    normalization: NormalizationParams | None = None,
    columns: tuple[str, ...] | None = None,
) -> TrainResult:
    """Fit the autoencoder to already-normalised rows with Adam and early stopping.

    Returns the weights with the best validation loss. ``normalization`` is
    the parameter set the rows were scaled with and is bound to the model.
    """
    x = np.asarray(_values(data), dtype=np.float32)
    if x.ndim != 2 or x.shape[1] != arch.input_dim:
        raise DimensionMismatch(f"data shape {x.shape} does not match input width {arch.input_dim}")
    n = x.shape[0]
    if n < max(2, cfg.batch_size):
        raise InsufficientData(f"need at least {max(2, cfg.batch_size)} rows, got {n}")
    if normalization is None:
        normalization = NormalizationParams(np.zeros(arch.input_dim), np.ones(arch.input_dim))

    rng = np.random.default_rng(cfg.seed)
    perm = rng.permutation(n)
    n_val = min(n - 1, max(1, int(round(cfg.validation_fraction * n))))
    x_val = x[perm[:n_val]]
    x_train = x[perm[n_val:]]

    weights, biases = init_params(arch, cfg.seed)
    params = weights + biases
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    b1, b2, eps = 0.9, 0.999, 1e-8
    lr = np.float32(cfg.learning_rate)
    step = 0

    best_val = math.inf
    best = ([w.copy() for w in weights], [b.copy() for b in biases])
    history: list[dict] = []
    stale = 0
    batch = min(cfg.batch_size, x_train.shape[0])
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(x_train.shape[0])
        total = 0.0
        for i in range(0, len(order), batch):
            xb = x_train[order[i : i + batch]]
            loss, gw, gb = loss_and_grads(weights, biases, xb)
            if not math.isfinite(loss):
                raise NonFiniteLoss(epoch, loss)
            total += loss * xb.shape[0]
            step += 1
            c1 = 1.0 - b1**step
            c2 = 1.0 - b2**step
            for p, g, mk, vk in zip(params, gw + gb, m, v):
                mk *= b1
                mk += (1 - b1) * g
                vk *= b2
                vk += (1 - b2) * np.square(g)
                p -= (lr * (mk / c1) / (np.sqrt(vk / c2) + eps)).astype(np.float32)
        train_loss = total / x_train.shape[0]
        val_loss = _mean_loss(weights, biases, x_val)
        if not (math.isfinite(train_loss) and math.isfinite(val_loss)):
            raise NonFiniteLoss(epoch, train_loss if not math.isfinite(train_loss) else val_loss)
        if val_loss < best_val:
            best_val = val_loss
            best = ([w.copy() for w in weights], [b.copy() for b in biases])
            stale = 0
        else:
            stale += 1
        history.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss, "best_val_loss": best_val})
        logger.debug("epoch %d train=%.6g val=%.6g", epoch, train_loss, val_loss)
        if stale >= cfg.patience:
            break

    meta = {
        "seed": cfg.seed,
        "epochs_run": len(history),
        "final_train_loss": history[-1]["train_loss"],
        "best_val_loss": best_val,
        "train_config": cfg.to_dict(),
        "arch_rule": ARCH_RULE,
    }
    model = AEModel(arch, tuple(best[0]), tuple(best[1]), normalization, columns, meta)
    return TrainResult(model, history)


def fit_autoencoder(raw, cfg: TrainConfig = TrainConfig(), columns=None, metadata=None) -> TrainResult:
    """Fit normaliser on ``raw``, build the architecture for its width, and train."""
    x = _values(raw)
    params = fit_normalizer(x)
    result = train(build_architecture(x.shape[1]), normalize(x, params), cfg, params, columns)
    if metadata:
        result.model = result.model.with_metadata(**metadata)
    return result


# -- persistence ----------------------------------------------------------


def _payload(model: AEModel) -> dict:
    return {
        "architecture": {"widths": list(model.architecture.widths), "latent": model.architecture.latent, "rule": ARCH_RULE},
        "normalization": model.normalization.to_dict(),
        "columns": list(model.columns) if model.columns is not None else None,
        "layers": [
            {"weight": [[float(v) for v in row] for row in W], "bias": [float(v) for v in b]}
            for W, b in zip(model.weights, model.biases)
        ],
        "metadata": model.metadata,
    }


def dumps_model(model: AEModel) -> str:
    payload = json.dumps(_payload(model), sort_keys=True, separators=(",", ":"))
    digest = hashlib.sha256(payload.encode()).hexdigest()
    header = {
        "format": FILE_MAGIC,
        "version": MODEL_FORMAT_VERSION,
        "widths": list(model.architecture.widths),
        "seed": model.metadata.get("seed"),
        "payload_bytes": len(payload.encode()),
        "sha256": digest,
    }
    return json.dumps(header, sort_keys=True) + "\n" + payload + "\n"


def save_model(model: AEModel, path) -> str:
    """Write the model file; returns the payload checksum."""
    text = dumps_model(model)
    Path(path).write_text(text)
    return json.loads(text.split("\n", 1)[0])["sha256"]


def loads_model(text: str) -> AEModel:
    head, _, rest = text.partition("\n")
    try:
        header = json.loads(head)
    except json.JSONDecodeError as exc:
        raise ChecksumMismatch("unreadable model header") from exc
    if header.get("format") != FILE_MAGIC:
        raise VersionMismatch(f"not a model file (format={header.get('format')!r})")
    if header.get("version") != MODEL_FORMAT_VERSION:
        raise VersionMismatch(f"model format version {header.get('version')} unsupported (expected {MODEL_FORMAT_VERSION})")
    payload = rest.rstrip("\n")
    if hashlib.sha256(payload.encode()).hexdigest() != header.get("sha256"):
        raise ChecksumMismatch("model payload checksum mismatch (truncated or corrupted file)")
    obj = json.loads(payload)
    arch = AEArchitecture(tuple(obj["architecture"]["widths"]))
    weights = tuple(
        np.array(layer["weight"], dtype=np.float32).reshape(a, b)
        for layer, a, b in zip(obj["layers"], arch.widths[:-1], arch.widths[1:])
    )
    biases = tuple(np.array(layer["bias"], dtype=np.float32) for layer in obj["layers"])
    columns = tuple(obj["columns"]) if obj.get("columns") is not None else None
    return AEModel(arch, weights, biases, NormalizationParams.from_dict(obj["normalization"]), columns, obj["metadata"])


def load_model(path) -> AEModel:
    return loads_model(Path(path).read_text())
