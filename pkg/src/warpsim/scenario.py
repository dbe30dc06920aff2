"""Scenario construction: node placement, session generation, traffic sources, run loop."""

from __future__ import annotations

import dataclasses
import enum
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import TextIO

from .engine import NS_PER_S, Simulator, ns_to_seconds, seconds_to_ns
from .frames import Frame, MacAddress
from .host import AppPacket
from .mac import MacConfig
from .metrics import TraceRecord
from .network import Network
from .radio import RadioConfig
from .trace import NULL_TRACER, Tracer


class ConfigError(ValueError):
    pass


class Traffic(str, enum.Enum):
    S_DATA = "s_data"
    VOICE = "voice"


@dataclass(frozen=True)
class TrafficProfile:
    packet_size: int
    send_interval_ns: int
    # mean session duration; the packet count is geometric with mean duration / interval
    mean_session_s: float
    cw_min: int

    @property
    def rate_bps(self) -> float:
        return self.packet_size * 8 * NS_PER_S / self.send_interval_ns

    @property
    def mean_packets(self) -> float:
        return self.mean_session_s * NS_PER_S / self.send_interval_ns


PROFILES = {
    Traffic.S_DATA: TrafficProfile(packet_size=64, send_interval_ns=20_000_000, mean_session_s=900.0, cw_min=15),
    Traffic.VOICE: TrafficProfile(packet_size=160, send_interval_ns=20_000_000, mean_session_s=600.0, cw_min=20),
}


@dataclass
class ScenarioConfig:
    node_count: int = 50
    area_width: float = 1500.0
    area_height: float = 1500.0
    session_count: int = 10
    first_session_at: float = 0.2
    session_spacing: float = 10.0
    traffic: Traffic = Traffic.S_DATA
    sim_end: float = 600.0
    seed: int = 1

    def __post_init__(self) -> None:
        self.traffic = Traffic(self.traffic)
        if self.node_count < 2:
            raise ConfigError("node_count must be at least 2")
        if self.area_width < 0 or self.area_height < 0:
            raise ConfigError("area dimensions must be non-negative")
        if self.session_count < 0:
            raise ConfigError("session_count must be non-negative")
        if self.sim_end <= 0:
            raise ConfigError("sim_end must be positive")

    @property
    def profile(self) -> TrafficProfile:
        return PROFILES[self.traffic]

    @classmethod
    def from_text(cls, text: str, **overrides) -> "ScenarioConfig":
        """Parse flat ``key = value`` lines; ``#`` starts a comment."""
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        values: dict[str, object] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in types:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            values[key] = _convert(key, value, types[key])
        values.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(**values)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "ScenarioConfig":
        return cls.from_text(Path(path).read_text(), **overrides)

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            lines.append(f"{f.name} = {value.value if isinstance(value, Traffic) else value}")
        return "\n".join(lines) + "\n"


def _convert(key: str, value: str, typ) -> object:
    name = typ if isinstance(typ, str) else getattr(typ, "__name__", str(typ))
    try:
        if name == "int":
            return int(value)
        if name == "float":
            return float(value)
        if name == "Traffic":
            return Traffic(value.lower())
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return value


@dataclass
class Session:
    index: int
    source: int
    destination: int
    start_ns: int
    packet_count: int
    packet_size: int
    send_interval_ns: int

    @property
    def bytes_total(self) -> int:
        return self.packet_count * self.packet_size

    @property
    def start(self) -> float:
        return ns_to_seconds(self.start_ns)

    @property
    def end_ns(self) -> int:
        return self.start_ns + self.packet_count * self.send_interval_ns

    @property
    def end(self) -> float:
        return ns_to_seconds(self.end_ns)


def place_nodes(cfg: ScenarioConfig, rng: random.Random) -> list[tuple[float, float]]:
    return [(rng.uniform(0.0, cfg.area_width), rng.uniform(0.0, cfg.area_height)) for _ in range(cfg.node_count)]


def geometric(rng: random.Random, mean: float) -> int:
    """Geometric draw on {1, 2, ...} with the given mean, by inversion."""
    if mean <= 1.0:
        return 1
    u = 1.0 - rng.random()  # (0, 1]
    return max(1, math.ceil(math.log(u) / math.log1p(-1.0 / mean)))


def generate_sessions(cfg: ScenarioConfig, rng: random.Random) -> list[Session]:
    profile = cfg.profile
    first = seconds_to_ns(cfg.first_session_at)
    spacing = seconds_to_ns(cfg.session_spacing)
    sessions = []
    for k in range(1, cfg.session_count + 1):
        source, destination = rng.sample(range(cfg.node_count), 2)
        sessions.append(Session(
            index=k,
            source=source,
            destination=destination,
            start_ns=first + spacing * (k - 1),
            packet_count=geometric(rng, profile.mean_packets),
            packet_size=profile.packet_size,
            send_interval_ns=profile.send_interval_ns,
        ))
    return sessions


class AppSource:
    """Constant-bit-rate datagram source for one session."""

    def __init__(self, session: Session, network: Network, on_generated):
        self.session = session
        self.network = network
        self.on_generated = on_generated
        self.emitted = 0
        self.uids: list[int] = []

    def start(self) -> None:
        self.network.sim.schedule(self.session.start_ns, self._emit)

    def _emit(self) -> None:
        s = self.session
        sim = self.network.sim
        uid = self.network.new_uid()
        packet = AppPacket(uid, s.packet_size, sim.now, s.destination, s.index)
        self.emitted += 1
        self.uids.append(uid)
        self.on_generated(packet, s.source)
        self.network.nodes[s.source].host.resolve_and_send(s.destination, packet)
        if self.emitted < s.packet_count:
            sim.schedule_in(s.send_interval_ns, self._emit)


@dataclass
class SessionStats:
    session: Session
    arp_requests: int
    arp_replies: int

    @property
    def path_discovered(self) -> bool:
        return self.arp_replies > 0


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    positions: list[tuple[float, float]]
    sessions: list[SessionStats]
    records: list[TraceRecord]
    transmissions: int = 0
    events: int = 0
    mac_drops: dict[str, int] = field(default_factory=dict)


class Recorder:
    """Collects one TraceRecord per application packet."""

    def __init__(self, tracer: Tracer):
        self.tracer = tracer
        self.by_uid: dict[int, TraceRecord] = {}
        self.records: list[TraceRecord] = []
        self.addresses: list[MacAddress] = []

    def generated(self, packet: AppPacket, source: int) -> None:
        rec = TraceRecord(
            uid=packet.uid, size=packet.size, generated_at=ns_to_seconds(packet.origin_ns),
            source=source, destination=packet.destination, session=packet.session,
        )
        self.by_uid[packet.uid] = rec
        self.records.append(rec)
        self.tracer.app_event(packet.origin_ns, source, "generated", packet.uid,
                              MacAddress.for_node(source), MacAddress.for_node(packet.destination), packet.size)

    def delivered(self, node: int, now: int, frame: Frame) -> None:
        rec = self.by_uid.get(frame.uid)
        if rec is None or rec.delivered_at is not None or rec.destination != node:
            return
        rec.delivered_at = ns_to_seconds(now)
        self.tracer.event(now, node, "delivered", frame)


def build_network(cfg: ScenarioConfig, tracer: Tracer = NULL_TRACER, radio: RadioConfig | None = None,
                  mac: MacConfig | None = None, on_delivered=None) -> tuple[Network, list[Session]]:
    from .engine import RngStreams

    rngs = RngStreams(cfg.seed)
    positions = place_nodes(cfg, rngs["placement"])
    sessions = generate_sessions(cfg, rngs["traffic"])
    mac = mac or MacConfig(cw_min=cfg.profile.cw_min)
    network = Network(positions, radio=radio, mac=mac, seed=cfg.seed, tracer=tracer, sim=Simulator(),
                      on_delivered=on_delivered)
    return network, sessions


def run_scenario(cfg: ScenarioConfig, trace_sink: TextIO | None = None, full_trace: bool = False,
                 radio: RadioConfig | None = None, mac: MacConfig | None = None) -> ScenarioResult:
    tracer = Tracer(trace_sink, full=full_trace) if trace_sink is not None else NULL_TRACER
    recorder = Recorder(tracer)
    network, sessions = build_network(cfg, tracer, radio, mac, on_delivered=recorder.delivered)
    for s in sessions:
        AppSource(s, network, recorder.generated).start()
    network.sim.run_until(seconds_to_ns(cfg.sim_end))

    stats = []
    for s in sessions:
        host = network.nodes[s.source].host
        stats.append(SessionStats(s, host.requests_sent[s.destination], host.replies_received[s.destination]))
    drops: dict[str, int] = {}
    for node in network.nodes:
        for reason, count in node.mac.drops.items():
            drops[reason] = drops.get(reason, 0) + count
    return ScenarioResult(
        config=cfg,
        positions=network.positions,
        sessions=stats,
        records=recorder.records,
        transmissions=network.channel.transmissions,
        events=network.sim.executed,
        mac_drops=dict(sorted(drops.items())),
    )
