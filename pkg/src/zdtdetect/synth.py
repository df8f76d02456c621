"""Labelled synthetic flow corpora: per-network benign profiles plus attack behaviours.

Benign traffic follows a community contact model: internal hosts sit in
groups, talk mostly to servers in their own group, sometimes across groups
and to a pool of external services. Attacks are generated by behavioural
templates whose flow-level statistics stay close to ordinary traffic while
their endpoint structure (fan-out, convergence, new external peers,
cross-group contacts) is unusual.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import UnknownTemplate
from .flows import BENIGN, PROTOCOL_TCP, PROTOCOL_UDP, AttackLabel, FlowDataset, FlowRecord, load_dataset, save_dataset

logger = logging.getLogger(__name__)

UDP_PORTS = frozenset({53, 123, 161, 514})

# per-service (log duration, log bytes) offsets added to a profile's lognormal means
SERVICE_SHIFTS = {
    53: (-2.5, -3.0),
    123: (-2.5, -3.5),
    80: (0.0, 0.5),
    443: (0.0, 0.0),
    8080: (0.0, 0.3),
    8443: (0.0, 0.0),
    22: (1.5, 0.5),
    445: (0.5, 1.0),
    139: (0.5, 0.8),
    3389: (2.0, 1.5),
}


@dataclass(frozen=True)
class NetworkProfile:
    network_id: str
    n_hosts: int = 200
    n_groups: int = 6
    servers_per_group: int = 3
    n_external: int = 150
    intra_group_rate: float = 0.85
    external_rate: float = 0.3
    duration_lognorm: tuple[float, float] = (0.0, 0.7)
    bytes_lognorm: tuple[float, float] = (7.5, 0.8)
    port_weights: dict = field(default_factory=lambda: {443: 0.4, 80: 0.15, 53: 0.15, 445: 0.08, 22: 0.05, 3389: 0.04, 123: 0.05, 8080: 0.08})
    ephemeral_range: tuple[int, int] = (49152, 65535)
    diurnal_peak_hour: float = 14.0
    diurnal_width_hours: float = 3.0
    diurnal_share: float = 0.7
    start_time: float = 1_600_000_000.0
    days: int = 2
    subnet: str = "10.0"

    def __post_init__(self):
        if self.n_hosts < 4:
            raise ValueError("n_hosts must be >= 4")
        if not 1 <= self.n_groups <= self.n_hosts:
            raise ValueError("n_groups must be in [1, n_hosts]")
        if self.servers_per_group < 1 or self.n_external < 1 or self.days < 1:
            raise ValueError("servers_per_group, n_external and days must be positive")
        for name in ("intra_group_rate", "external_rate", "diurnal_share"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must be in (0, 1)")
        if self.duration_lognorm[1] <= 0 or self.bytes_lognorm[1] <= 0 or self.diurnal_width_hours <= 0:
            raise ValueError("distribution scales must be positive")
        if not self.port_weights or min(self.port_weights.values()) <= 0:
            raise ValueError("port weights must be positive")
        lo, hi = self.ephemeral_range
        if not 0 < lo < hi <= 65535:
            raise ValueError("invalid ephemeral port range")

    @property
    def mean_bytes(self) -> float:
        mu, sigma = self.bytes_lognorm
        return float(np.exp(mu + sigma**2 / 2))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["port_weights"] = {str(k): v for k, v in self.port_weights.items()}
        return d

    @classmethod
    def from_dict(cls, obj: dict) -> NetworkProfile:
        obj = dict(obj)
        unknown = set(obj) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown profile field(s): {', '.join(sorted(unknown))}")
        if "port_weights" in obj:
            obj["port_weights"] = {int(k): float(v) for k, v in obj["port_weights"].items()}
        for key in ("duration_lognorm", "bytes_lognorm", "ephemeral_range"):
            if key in obj:
                obj[key] = tuple(obj[key])
        return cls(**obj)


DEMO_PROFILES = {
    "net-a": NetworkProfile("net-a", subnet="10.1"),
    "net-b": NetworkProfile(
        "net-b",
        n_hosts=260,
        n_groups=8,
        servers_per_group=2,
        n_external=200,
        intra_group_rate=0.8,
        external_rate=0.4,
        duration_lognorm=(0.8, 0.6),
        bytes_lognorm=(8.2, 0.7),
        port_weights={443: 0.55, 80: 0.1, 53: 0.2, 445: 0.03, 22: 0.02, 123: 0.05, 8443: 0.05},
        ephemeral_range=(32768, 60999),
        diurnal_peak_hour=10.0,
        diurnal_width_hours=2.5,
        start_time=1_610_000_000.0,
        subnet="10.2",
    ),
    "net-c": NetworkProfile(
        "net-c",
        n_hosts=160,
        n_groups=5,
        servers_per_group=3,
        n_external=120,
        intra_group_rate=0.9,
        external_rate=0.25,
        duration_lognorm=(-0.6, 0.9),
        bytes_lognorm=(7.0, 1.0),
        port_weights={443: 0.3, 80: 0.2, 53: 0.1, 445: 0.15, 139: 0.05, 22: 0.1, 3389: 0.05, 123: 0.05},
        ephemeral_range=(1024, 65535),
        diurnal_peak_hour=20.0,
        diurnal_width_hours=4.0,
        diurnal_share=0.5,
        start_time=1_620_000_000.0,
        subnet="10.3",
    ),
}


class _Topology:
    """Host addressing and per-host contact lists derived from a profile.

    Every internal host talks to a small fixed set of destinations: the
    servers of its own group, a few peers in the group, one or two servers
    of other groups and a handful of popular external services.
    """

    def __init__(self, p: NetworkProfile, rng: np.random.Generator):
        self.profile = p
        self.hosts = [f"{p.subnet}.{i // 250}.{i % 250 + 1}" for i in range(p.n_hosts)]
        self.group = np.arange(p.n_hosts) % p.n_groups
        self.members = [np.flatnonzero(self.group == g) for g in range(p.n_groups)]
        self.servers = [m[: min(p.servers_per_group, len(m))] for m in self.members]
        self.all_servers = np.concatenate(self.servers)
        self.externals = [f"172.{16 + i // 250 % 16}.{i % 250}.{(i * 7) % 250 + 1}" for i in range(p.n_external)]
        self.host_weight = rng.pareto(1.5, p.n_hosts) + 1.0
        self.host_weight /= self.host_weight.sum()
        ext = 1.0 / np.arange(1, p.n_external + 1) ** 1.1
        self.ext_weight = ext / ext.sum()
        self.span = p.days * 86400.0

        # per-host (internal destinations, weights) and external destinations
        self.internal_contacts = []
        self.external_contacts = []
        for h in range(p.n_hosts):
            g = self.group[h]
            own = [s for s in self.servers[g] if s != h]
            peers = [m for m in self.members[g] if m != h and m not in self.servers[g]]
            peers = list(rng.choice(peers, min(len(peers), int(rng.integers(2, 5))), replace=False)) if peers else []
            others = [s for gg in range(p.n_groups) if gg != g for s in self.servers[gg]]
            others = list(rng.choice(others, min(len(others), int(rng.integers(1, 3))), replace=False)) if others else []
            dsts = own + peers + others
            w = (
                [0.7 * p.intra_group_rate / max(1, len(own))] * len(own)
                + [0.3 * p.intra_group_rate / max(1, len(peers))] * len(peers)
                + [(1 - p.intra_group_rate) / max(1, len(others))] * len(others)
            )
            w = np.array(w) / np.sum(w)
            self.internal_contacts.append((np.array(dsts, dtype=np.int64), w))
            k_ext = int(rng.integers(3, 9))
            ext_pick = rng.choice(p.n_external, k_ext, replace=False, p=self.ext_weight)
            self.external_contacts.append(ext_pick)


def _timestamps(p: NetworkProfile, n: int, rng: np.random.Generator) -> np.ndarray:
    day = rng.integers(0, p.days, n)
    peak = rng.normal(p.diurnal_peak_hour, p.diurnal_width_hours, n) % 24.0
    flat = rng.uniform(0.0, 24.0, n)
    hour = np.where(rng.random(n) < p.diurnal_share, peak, flat)
    return p.start_time + day * 86400.0 + hour * 3600.0


def _protocol(port: int) -> int:
    return PROTOCOL_UDP if port in UDP_PORTS else PROTOCOL_TCP


def _packets(total_bytes: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return np.maximum(1, total_bytes // rng.integers(300, 1400, total_bytes.shape)).astype(np.int64)


def _records(ts, src, dst, sport, dport, dur, nbytes, pkts, label, protos=None) -> list[FlowRecord]:
    out = []
    for i in range(len(ts)):
        port = int(dport[i])
        out.append(
            FlowRecord(
                timestamp=round(float(ts[i]), 6),
                src_ip=src[i],
                dst_ip=dst[i],
                src_port=int(sport[i]),
                dst_port=port,
                protocol=int(protos[i]) if protos is not None else _protocol(port),
                duration=round(float(dur[i]), 6),
                total_bytes=int(nbytes[i]),
                packet_count=int(pkts[i]),
                label=label,
            )
        )
    return out


def generate_benign(profile: NetworkProfile, n_flows: int, seed: int) -> FlowDataset:
    if n_flows < 1:
        raise ValueError("n_flows must be >= 1")
    rng = np.random.default_rng(seed)
    topo = _Topology(profile, np.random.default_rng([seed, 0]))
    return FlowDataset(tuple(_benign_records(topo, n_flows, rng)), profile.network_id)


def _benign_records(topo: _Topology, n: int, rng: np.random.Generator) -> list[FlowRecord]:
    p = topo.profile
    src_idx = rng.choice(p.n_hosts, n, p=topo.host_weight)
    external = rng.random(n) < p.external_rate
    ports = np.array(list(p.port_weights), dtype=np.int64)
    pw = np.array(list(p.port_weights.values()), dtype=np.float64)
    dport = rng.choice(ports, n, p=pw / pw.sum())
    dst = []
    for i in range(n):
        s = src_idx[i]
        if external[i]:
            ext = topo.external_contacts[s]
            dst.append(topo.externals[ext[rng.integers(len(ext))]])
        else:
            dsts, w = topo.internal_contacts[s]
            dst.append(topo.hosts[dsts[rng.choice(len(dsts), p=w)]])
    src = [topo.hosts[s] for s in src_idx]
    ts = _timestamps(p, n, rng)
    sport = rng.integers(p.ephemeral_range[0], p.ephemeral_range[1] + 1, n)
    shift = np.array([SERVICE_SHIFTS.get(int(port), (0.0, 0.0)) for port in dport]).reshape(n, 2)
    dur = rng.lognormal(p.duration_lognorm[0] + shift[:, 0], p.duration_lognorm[1])
    nbytes = np.maximum(40, rng.lognormal(p.bytes_lognorm[0] + shift[:, 1], p.bytes_lognorm[1])).astype(np.int64)
    return _records(ts, src, dst, sport, dport, dur, nbytes, _packets(nbytes, rng), BENIGN)


# -- attack templates -----------------------------------------------------


@dataclass(frozen=True)
class AttackTemplate:
    name: str
    generator: str
    # (low, high) ranges; bytes may be given as a multiple of the benign mean
    sources: tuple[int, int] = (1, 1)
    targets: tuple[int, int] = (1, 1)
    internal_targets: bool = False
    server_targets: bool = False  # internal targets drawn from servers of every group
    reverse_share: float = 0.0  # fraction of flows opened by the target side
    external_sources: bool = False
    ports: tuple[int, ...] = (443,)
    duration: tuple[float, float] = (0.1, 1.0)
    total_bytes: tuple[float, float] = (200, 2000)
    bytes_scale_benign: bool = False
    window_hours: float = 6.0

    def parameter_vector(self) -> np.ndarray:
        return np.array(
            [
                float(np.mean(self.sources)),
                float(np.mean(self.targets)),
                float(self.internal_targets),
                float(self.server_targets),
                self.reverse_share,
                float(self.external_sources),
                float(len(self.ports)),
                np.log10(np.mean(self.duration) + 1e-3),
                np.log10(np.mean(self.total_bytes)) + (2.0 if self.bytes_scale_benign else 0.0),
                self.window_hours / 24.0,
            ]
        )


ATTACK_TEMPLATES = {
    t.name: t
    for t in (
        AttackTemplate("scanning", "scanner", external_sources=True, targets=(60, 120), internal_targets=True,
                       ports=tuple(range(1, 1025)), duration=(0.0, 0.01), total_bytes=(40, 120), window_hours=2.0),
        AttackTemplate("interrogation", "interrogation", external_sources=True, targets=(2, 3), internal_targets=True,
                       ports=(22, 445, 3389, 139, 161, 21), duration=(0.5, 4.0), total_bytes=(300, 3000), window_hours=8.0),
        AttackTemplate("botnet", "botnet", sources=(20, 40), targets=(1, 2), ports=(6667, 8080),
                       duration=(0.1, 1.0), total_bytes=(200, 600), window_hours=24.0),
        AttackTemplate("command_control", "command_control", sources=(3, 6), targets=(1, 1), ports=(443,), reverse_share=0.25,
                       duration=(600.0, 3600.0), total_bytes=(1000, 20000), window_hours=36.0),
        AttackTemplate("exfiltration", "exfiltration", sources=(1, 1), targets=(1, 2), ports=(443, 21, 22),
                       duration=(60.0, 600.0), total_bytes=(20, 80), bytes_scale_benign=True, window_hours=4.0),
        AttackTemplate("worm", "worm", sources=(1, 1), targets=(80, 160), internal_targets=True, ports=(445,),
                       duration=(0.5, 3.0), total_bytes=(2000, 8000), window_hours=12.0),
        AttackTemplate("ransomware", "fanout", sources=(1, 2), targets=(10, 20), internal_targets=True, server_targets=True,
                       ports=(445, 139),
                       duration=(5.0, 60.0), total_bytes=(100_000, 5_000_000), window_hours=3.0),
        AttackTemplate("rat", "beacon", sources=(1, 3), targets=(1, 1), ports=(4444, 1337, 5555), reverse_share=0.5,
                       duration=(10.0, 600.0), total_bytes=(500, 50_000), window_hours=30.0),
        AttackTemplate("infostealer", "beacon", sources=(3, 6), targets=(1, 1), ports=(80,),
                       duration=(0.2, 2.0), total_bytes=(5000, 50_000), window_hours=10.0),
        AttackTemplate("downloader", "beacon", sources=(4, 10), targets=(2, 3), ports=(80, 8080),
                       duration=(2.0, 20.0), total_bytes=(200_000, 2_000_000), window_hours=6.0),
    )
}


def _uniform_int(rng, lo_hi) -> int:
    lo, hi = lo_hi
    return int(rng.integers(lo, hi + 1))


def _attack_ip(cls_name: str, k: int) -> str:
    tag = sorted(ATTACK_TEMPLATES).index(cls_name) if cls_name in ATTACK_TEMPLATES else 99
    return f"198.51.{100 + tag}.{k + 1}"


def generate_attack(template, profile: NetworkProfile, n_flows: int, seed: int) -> FlowDataset:
    if isinstance(template, str):
        if template not in ATTACK_TEMPLATES:
            raise UnknownTemplate(f"no attack template named {template!r}")
        template = ATTACK_TEMPLATES[template]
    if n_flows < 1:
        raise ValueError("n_flows must be >= 1")
    rng = np.random.default_rng(seed)
    topo = _Topology(profile, np.random.default_rng([seed, 0]))
    return FlowDataset(tuple(_attack_records(template, topo, n_flows, rng)), profile.network_id)


def _attack_records(t: AttackTemplate, topo: _Topology, n: int, rng: np.random.Generator) -> list[FlowRecord]:
    p = topo.profile
    label = AttackLabel.attack(t.name)
    start = p.start_time + rng.uniform(0, max(0.0, topo.span - t.window_hours * 3600.0))
    ts = np.sort(start + rng.uniform(0, t.window_hours * 3600.0, n))
    sport = rng.integers(p.ephemeral_range[0], p.ephemeral_range[1] + 1, n)
    dur = rng.uniform(*t.duration, n)
    lo, hi = t.total_bytes
    if t.bytes_scale_benign:
        lo, hi = lo * p.mean_bytes, hi * p.mean_bytes
    nbytes = np.exp(rng.uniform(np.log(lo), np.log(hi), n)).astype(np.int64)

    n_src = _uniform_int(rng, t.sources)
    n_dst = _uniform_int(rng, t.targets)
    if t.external_sources:
        sources = [_attack_ip(t.name, k) for k in range(n_src)]
    else:
        sources = [topo.hosts[i] for i in rng.choice(p.n_hosts, n_src, replace=False)]
    if t.internal_targets and t.server_targets:
        n_dst = min(n_dst, len(topo.all_servers))
        targets = [topo.hosts[i] for i in rng.choice(topo.all_servers, n_dst, replace=False)]
    elif t.internal_targets:
        n_dst = min(n_dst, p.n_hosts)
        targets = [topo.hosts[i] for i in rng.choice(p.n_hosts, n_dst, replace=False)]
    else:
        targets = [_attack_ip(t.name, 50 + k) for k in range(n_dst)]
    ports = np.array(t.ports)

    if t.generator == "scanner":
        # one source sweeping hosts and (mostly distinct) low ports
        dport = rng.permutation(ports)[np.arange(n) % len(ports)]
        src = [sources[0]] * n
        dst = [targets[i] for i in rng.integers(0, len(targets), n)]
    elif t.generator == "botnet":
        # periodic beacons from every bot to the C2 set
        src = [sources[i % n_src] for i in range(n)]
        dst = [targets[(i // n_src) % n_dst] for i in range(n)]
        period = t.window_hours * 3600.0 / max(1, n // n_src)
        ts = start + (np.arange(n) // n_src) * period + rng.normal(0, 2.0, n)
        dport = np.full(n, ports[0])
    elif t.generator == "worm":
        # infection spreads: each contact infects its target with some probability
        # patient zero is a device not seen in ordinary traffic
        infected = [f"{p.subnet}.250.{rng.integers(1, 250)}"]
        src, dst = [], []
        for i in range(n):
            s = infected[0] if len(infected) == 1 or rng.random() < 0.6 else infected[rng.integers(1, len(infected))]
            d = targets[rng.integers(len(targets))]
            if d == s:
                d = targets[(targets.index(d) + 1) % len(targets)]
            src.append(s)
            dst.append(d)
            if d not in infected and len(infected) < 4 and rng.random() < 0.02:
                infected.append(d)
        dport = np.full(n, ports[0])
    else:
        # interrogation / exfiltration / command_control / fanout / beacon
        src = [sources[i] for i in rng.integers(0, n_src, n)]
        dst = [targets[i] for i in rng.integers(0, len(targets), n)]
        dport = ports[rng.integers(0, len(ports), n)]
        if t.generator == "interrogation":
            dur = rng.lognormal(np.log(np.mean(t.duration)), 0.5, n)
    if t.reverse_share > 0:
        flip = (rng.random(n) < t.reverse_share).tolist()
        src, dst = [d if f else s for s, d, f in zip(src, dst, flip)], [s if f else d for s, d, f in zip(src, dst, flip)]
    return _records(ts, src, dst, sport, dport, dur, nbytes, _packets(nbytes, rng), label)


# -- corpora --------------------------------------------------------------


@dataclass(frozen=True)
class CorpusSpec:
    profiles: tuple[NetworkProfile, ...]
    n_flows: int = 20_000
    attack_mix: dict = field(default_factory=dict)  # class -> fraction of each network's flows
    seed: int = 42

    def __post_init__(self):
        if not self.profiles:
            raise ValueError("profiles: at least one profile is required")
        if self.n_flows < 1:
            raise ValueError("n_flows: must be >= 1")
        ids = [p.network_id for p in self.profiles]
        if len(set(ids)) != len(ids):
            raise ValueError("profiles: network ids must be distinct")
        for cls, frac in self.attack_mix.items():
            if cls not in ATTACK_TEMPLATES:
                raise ValueError(f"attack_mix: unknown attack class {cls!r}")
            if not 0 <= frac < 1:
                raise ValueError(f"attack_mix: fraction for {cls!r} must be in [0, 1)")
        if sum(self.attack_mix.values()) >= 1:
            raise ValueError("attack_mix: fractions must sum to less than 1")

    @classmethod
    def from_dict(cls, obj: dict) -> CorpusSpec:
        obj = dict(obj)
        unknown = set(obj) - {"profiles", "n_flows", "attack_mix", "holdout", "seed"}
        if unknown:
            raise ValueError(f"unknown corpus spec field(s): {', '.join(sorted(unknown))}")
        profiles = []
        for item in obj.get("profiles", list(DEMO_PROFILES)):
            if isinstance(item, str):
                if item not in DEMO_PROFILES:
                    raise ValueError(f"profiles: unknown built-in profile {item!r}")
                profiles.append(DEMO_PROFILES[item])
            elif isinstance(item, dict) and "base" in item:
                base = item["base"]
                if base not in DEMO_PROFILES:
                    raise ValueError(f"profiles: unknown built-in profile {base!r}")
                overrides = {k: v for k, v in item.items() if k != "base"}
                merged = {**DEMO_PROFILES[base].to_dict(), **overrides}
                profiles.append(NetworkProfile.from_dict(merged))
            elif isinstance(item, dict):
                profiles.append(NetworkProfile.from_dict(item))
            else:
                raise ValueError(f"profiles: cannot interpret {item!r}")
        mix = {str(k).lower(): float(v) for k, v in obj.get("attack_mix", {}).items()}
        holdout = obj.get("holdout")
        if holdout:
            if not isinstance(holdout, dict) or "class" not in holdout or "prevalence" not in holdout:
                raise ValueError("holdout: expected {'class': ..., 'prevalence': ...}")
            mix[str(holdout["class"]).lower()] = float(holdout["prevalence"])
        n_flows = obj.get("n_flows", 20_000)
        seed = obj.get("seed", 42)
        if not isinstance(n_flows, int) or isinstance(n_flows, bool):
            raise ValueError("n_flows: must be an integer")
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ValueError("seed: must be an integer")
        return cls(tuple(profiles), n_flows, mix, seed)

    def to_dict(self) -> dict:
        return {
            "profiles": [p.to_dict() for p in self.profiles],
            "n_flows": self.n_flows,
            "attack_mix": dict(self.attack_mix),
            "seed": self.seed,
        }


DEMO_ATTACK_MIX = {
    "scanning": 0.015,
    "interrogation": 0.015,
    "botnet": 0.015,
    "command_control": 0.015,
    "exfiltration": 0.015,
    "worm": 0.015,
    "ransomware": 0.015,
    "rat": 0.015,
}


def demo_spec(n_flows: int = 20_000, seed: int = 42, attack_mix: dict | None = None) -> CorpusSpec:
    mix = DEMO_ATTACK_MIX if attack_mix is None else attack_mix
    return CorpusSpec(tuple(DEMO_PROFILES.values()), n_flows, dict(mix), seed)


def class_counts(spec: CorpusSpec) -> dict:
    counts = {cls: int(round(frac * spec.n_flows)) for cls, frac in sorted(spec.attack_mix.items()) if frac > 0}
    return {"benign": spec.n_flows - sum(counts.values()), **counts}


def generate_network(profile: NetworkProfile, counts: dict, seed: int) -> FlowDataset:
    topo = _Topology(profile, np.random.default_rng([seed, 0]))
    records = _benign_records(topo, counts["benign"], np.random.default_rng([seed, 1])) if counts["benign"] else []
    for k, cls in enumerate(sorted(c for c in counts if c != "benign")):
        rng = np.random.default_rng([seed, 2, k])
        records += _attack_records(ATTACK_TEMPLATES[cls], topo, counts[cls], rng)
    order = sorted(range(len(records)), key=lambda i: (records[i].timestamp, i))
    return FlowDataset(tuple(records[i] for i in order), profile.network_id)


def generate_corpus(spec) -> tuple[dict, dict]:
    """Returns ({network_id: FlowDataset}, manifest)."""
    if isinstance(spec, dict):
        spec = CorpusSpec.from_dict(spec)
    counts = class_counts(spec)
    corpus, networks = {}, []
    for i, profile in enumerate(spec.profiles):
        net_seed = int(np.random.SeedSequence([spec.seed, i]).generate_state(1)[0])
        corpus[profile.network_id] = generate_network(profile, counts, net_seed)
        networks.append(
            {"network_id": profile.network_id, "counts": dict(counts), "seed": net_seed, "profile": profile.to_dict()}
        )
        logger.info("generated %s: %d flows", profile.network_id, spec.n_flows)
    manifest = {"seed": spec.seed, "n_flows": spec.n_flows, "attack_mix": dict(spec.attack_mix), "networks": networks}
    return corpus, manifest


MANIFEST_NAME = "manifest.json"


def save_corpus(corpus: dict, manifest: dict, out_dir) -> list[Path]:
    """Write one ``<network_id>.csv`` per network plus the manifest; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for nid, ds in corpus.items():
        path = out / f"{nid}.csv"
        save_dataset(ds, path)
        paths.append(path)
    mpath = out / MANIFEST_NAME
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    paths.append(mpath)
    return paths


def load_corpus(directory) -> tuple[dict, dict]:
    """Read a corpus written by :func:`save_corpus`, in manifest order."""
    directory = Path(directory)
    manifest = json.loads((directory / MANIFEST_NAME).read_text())
    corpus = {}
    for net in manifest["networks"]:
        nid = net["network_id"]
        corpus[nid] = load_dataset(directory / f"{nid}.csv", network_id=nid, strict=True)
    return corpus, manifest


def with_profile(profile: NetworkProfile, **changes) -> NetworkProfile:
    return replace(profile, **changes)
