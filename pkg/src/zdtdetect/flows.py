"""Flow record data model, ingestion and deterministic splitting.

Canonical CSV header::

    timestamp,src_ip,dst_ip,src_port,dst_port,protocol,duration,total_bytes,packet_count,label

JSONL files carry one object per line with the same keys.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator

import numpy as np

from .errors import EmptyDataset, MalformedRow, RangeError, SchemaError

logger = logging.getLogger(__name__)

COLUMNS = (
    "timestamp",
    "src_ip",
    "dst_ip",
    "src_port",
    "dst_port",
    "protocol",
    "duration",
    "total_bytes",
    "packet_count",
    "label",
)

# Union of the classes named for the range and malware-lab corpora.
ATTACK_TAXONOMY = (
    "scanning",
    "interrogation",
    "botnet",
    "command_control",
    "exfiltration",
    "ransomware",
    "rat",
    "infostealer",
    "worm",
    "downloader",
)

PROTOCOL_TCP = 6
PROTOCOL_UDP = 17
PROTOCOL_ICMP = 1


@dataclass(frozen=True, slots=True)
class AttackLabel:
    kind: str  # "benign" | "attack" | "unlabeled"
    attack_class: str | None = None

    def __post_init__(self):
        if self.kind not in ("benign", "attack", "unlabeled"):
            raise ValueError(f"unknown label kind {self.kind!r}")
        if (self.kind == "attack") != (self.attack_class is not None):
            raise ValueError("attack_class must be set exactly for attack labels")
        if self.attack_class is not None and (
            not self.attack_class or self.attack_class != self.attack_class.lower()
        ):
            raise ValueError(f"attack class must be non-empty lowercase: {self.attack_class!r}")

    @classmethod
    def parse(cls, text: str) -> AttackLabel:
        value = text.strip().lower()
        if not value:
            raise ValueError("empty label")
        if value == "benign":
            return BENIGN
        if value == "unlabeled":
            return UNLABELED
        return cls("attack", value)

    @classmethod
    def attack(cls, name: str) -> AttackLabel:
        return cls("attack", name.lower())

    @property
    def is_benign(self) -> bool:
        return self.kind == "benign"

    @property
    def is_attack(self) -> bool:
        return self.kind == "attack"

    @property
    def is_unlabeled(self) -> bool:
        return self.kind == "unlabeled"

    def __str__(self):
        return self.attack_class if self.is_attack else self.kind


BENIGN = AttackLabel("benign")
UNLABELED = AttackLabel("unlabeled")


@dataclass(frozen=True, slots=True)
class FlowRecord:
    timestamp: float
    src_ip: str
    dst_ip: str
    src_port: int
    dst_port: int
    protocol: int
    duration: float
    total_bytes: int
    packet_count: int
    label: AttackLabel = UNLABELED

    def __post_init__(self):
        validate_record(self)

    def to_row(self) -> list[str]:
        return [
            repr(float(self.timestamp)),
            self.src_ip,
            self.dst_ip,
            str(self.src_port),
            str(self.dst_port),
            str(self.protocol),
            repr(float(self.duration)),
            str(self.total_bytes),
            str(self.packet_count),
            str(self.label),
        ]

    def to_dict(self) -> dict:
        return {
            "timestamp": float(self.timestamp),
            "src_ip": self.src_ip,
            "dst_ip": self.dst_ip,
            "src_port": self.src_port,
            "dst_port": self.dst_port,
            "protocol": self.protocol,
            "duration": float(self.duration),
            "total_bytes": self.total_bytes,
            "packet_count": self.packet_count,
            "label": str(self.label),
        }


def validate_record(r: FlowRecord) -> None:
    if not r.src_ip or not r.dst_ip:
        raise RangeError(f"empty endpoint identifier in {r!r}")
    for name in ("src_port", "dst_port"):
        port = getattr(r, name)
        if not 0 <= port <= 65535:
            raise RangeError(f"{name}={port} outside [0, 65535]")
    if not 0 <= r.protocol <= 255:
        raise RangeError(f"protocol={r.protocol} outside [0, 255]")
    if not (r.duration >= 0 and np.isfinite(r.duration)):
        raise RangeError(f"duration={r.duration} must be finite and >= 0")
    if not np.isfinite(r.timestamp):
        raise RangeError(f"timestamp={r.timestamp} must be finite")
    if r.total_bytes < 0:
        raise RangeError(f"total_bytes={r.total_bytes} must be >= 0")
    if r.packet_count < 0:
        raise RangeError(f"packet_count={r.packet_count} must be >= 0")


@dataclass(frozen=True)
class RejectedRow:
    line: int
    content: str
    reason: str


@dataclass(frozen=True)
class FlowDataset:
    records: tuple[FlowRecord, ...]
    network_id: str = ""
    rejected: tuple[RejectedRow, ...] = field(default=(), compare=False)

    def __len__(self):
        return len(self.records)

    def __iter__(self) -> Iterator[FlowRecord]:
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def labels(self) -> list[AttackLabel]:
        return [r.label for r in self.records]

    def subset(self, indices: Iterable[int]) -> FlowDataset:
        return FlowDataset(tuple(self.records[i] for i in indices), self.network_id)


def _to_int(text: str, name: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"{name} must be integral, got {text!r}")
    return int(value)


def _record_from_fields(fields: dict, content: str) -> FlowRecord:
    try:
        kwargs = dict(
            timestamp=float(fields["timestamp"]),
            src_ip=str(fields["src_ip"]).strip(),
            dst_ip=str(fields["dst_ip"]).strip(),
            src_port=_to_int(str(fields["src_port"]), "src_port"),
            dst_port=_to_int(str(fields["dst_port"]), "dst_port"),
            protocol=_to_int(str(fields["protocol"]), "protocol"),
            duration=float(fields["duration"]),
            total_bytes=_to_int(str(fields["total_bytes"]), "total_bytes"),
            packet_count=_to_int(str(fields["packet_count"]), "packet_count"),
            label=AttackLabel.parse(str(fields["label"])),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedRow(f"{exc} in row {content!r}") from exc
    try:
        return FlowRecord(**kwargs)
    except RangeError as exc:
        raise RangeError(f"{exc} in row {content!r}") from exc


def parse_flow_record(line: str, format: str = "csv", columns: tuple[str, ...] = COLUMNS) -> FlowRecord:
    """Parse one data row. ``columns`` gives the CSV field order (header order)."""
    content = line.rstrip("\r\n")
    if format == "csv":
        values = next(csv.reader([content]), [])
        if len(values) != len(columns):
            raise MalformedRow(f"expected {len(columns)} columns, got {len(values)} in row {content!r}")
        return _record_from_fields(dict(zip(columns, values)), content)
    if format == "jsonl":
        try:
            obj = json.loads(content)
        except json.JSONDecodeError as exc:
            raise MalformedRow(f"invalid JSON in row {content!r}") from exc
        if not isinstance(obj, dict):
            raise MalformedRow(f"expected a JSON object in row {content!r}")
        return _record_from_fields(obj, content)
    raise ValueError(f"unknown format {format!r}")


def _guess_format(path: Path) -> str:
    return "jsonl" if path.suffix.lower() in (".jsonl", ".json", ".ndjson") else "csv"


def load_dataset(path, format: str | None = None, network_id: str | None = None, strict: bool = False) -> FlowDataset:
    """Load a flow file. Bad rows are skipped and reported unless ``strict``."""
    path = Path(path)
    format = format or _guess_format(path)
    network_id = path.stem if network_id is None else network_id
    records: list[FlowRecord] = []
    rejected: list[RejectedRow] = []
    with open(path, newline="") as fh:
        if format == "csv":
            header_line = fh.readline()
            if not header_line.strip():
                raise SchemaError(f"{path}: missing header row")
            header = tuple(h.strip() for h in next(csv.reader([header_line])))
            missing = [c for c in COLUMNS if c not in header]
            if missing:
                raise SchemaError(f"{path}: missing required column(s) {', '.join(missing)}")
            columns = header
            first_line = 2
        else:
            columns = COLUMNS
            first_line = 1
        for lineno, line in enumerate(fh, start=first_line):
            if not line.strip():
                continue
            try:
                records.append(parse_flow_record(line, format, columns))
            except (MalformedRow, RangeError) as exc:
                if strict:
                    raise
                rejected.append(RejectedRow(lineno, line.rstrip("\r\n"), str(exc)))
    if rejected:
        logger.warning("%s: rejected %d row(s)", path, len(rejected))
    return FlowDataset(tuple(records), network_id, tuple(rejected))


def dumps_dataset(ds: FlowDataset, format: str = "csv") -> str:
    buf = io.StringIO()
    if format == "csv":
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for r in ds.records:
            writer.writerow(r.to_row())
    elif format == "jsonl":
        for r in ds.records:
            buf.write(json.dumps(r.to_dict()) + "\n")
    else:
        raise ValueError(f"unknown format {format!r}")
    return buf.getvalue()


def save_dataset(ds: FlowDataset, path, format: str | None = None) -> None:
    path = Path(path)
    Path(path).write_text(dumps_dataset(ds, format or _guess_format(path)))


def split_indices(n: int, train_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded random partition of ``range(n)``; each part keeps ascending order."""
    if not 0 < train_fraction < 1:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    if n == 0:
        raise EmptyDataset("cannot split an empty dataset")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(round(train_fraction * n))
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def split_dataset(ds: FlowDataset, train_fraction: float, seed: int) -> tuple[FlowDataset, FlowDataset]:
    train_idx, test_idx = split_indices(len(ds), train_fraction, seed)
    return ds.subset(train_idx), ds.subset(test_idx)


def filter_by_label(ds: FlowDataset, predicate: Callable[[AttackLabel], bool]) -> FlowDataset:
    return FlowDataset(tuple(r for r in ds.records if predicate(r.label)), ds.network_id)


def is_benign(label: AttackLabel) -> bool:
    return label.is_benign


def is_attack(label: AttackLabel) -> bool:
    return label.is_attack


def of_class(name: str) -> Callable[[AttackLabel], bool]:
    name = name.lower()
    return lambda label: label.attack_class == name
