"""Radio nodes: host + wARP-Path relay + DCF MAC sharing one channel."""

from __future__ import annotations

from collections import Counter
from typing import Callable, Sequence

from .engine import RngStreams, Simulator
from .frames import BROADCAST, Frame, FrameKind, MacAddress, decapsulate_for_upper, rewrite_for_hop
from .host import ArpConfig, Host
from .mac import Dcf, EnqueueResult, MacConfig
from .radio import Channel, RadioConfig
from .relay import Action, Relay
from .trace import NULL_TRACER, Tracer


class Node:
    def __init__(self, index: int, network: "Network"):
        self.index = index
        self.network = network
        self.sim = network.sim
        self.tracer = network.tracer
        self.address = MacAddress.for_node(index)
        self.position = network.positions[index]
        self.relay = Relay(self.address)
        self.mac = Dcf(
            index, self.address, network.sim, network.channel, network.mac_cfg,
            network.rngs["jitter"], network.rngs["backoff"], self.on_frame, network.tracer,
        )
        self.host = Host(self, network.arp_cfg, network.on_delivered)
        # broadcast uid -> times this node put it back on the air
        self.rebroadcasts: Counter[int] = Counter()
        self.delivered_up: Counter[int] = Counter()

    def send(self, frame: Frame) -> EnqueueResult:
        return self.mac.enqueue(frame)

    def on_frame(self, frame: Frame) -> None:
        now = self.sim.now
        decision = self.relay.process_frame(frame, now)
        action = decision.action
        if action is Action.DISCARD:
            if self.tracer.full:
                self.tracer.frame_event(now, self.index, "discard", frame)
            return
        if action is Action.DELIVER_UP or action is Action.DELIVER_UP_AND_FORWARD:
            self.delivered_up[frame.uid] += 1
            self.host.receive(decapsulate_for_upper(frame, self.address))
        if action is Action.FORWARD or action is Action.DELIVER_UP_AND_FORWARD:
            if decision.next_hop == BROADCAST:
                self.rebroadcasts[frame.uid] += 1
            if self.tracer.full:
                self.tracer.frame_event(now, self.index, "forward", frame)
            self.send(rewrite_for_hop(frame, self.address, decision.next_hop))


class Network:
    """All nodes of one run, with their shared channel and random streams."""

    def __init__(
        self,
        positions: Sequence[Sequence[float]],
        radio: RadioConfig | None = None,
        mac: MacConfig | None = None,
        arp: ArpConfig | None = None,
        seed: int = 0,
        tracer: Tracer | None = None,
        sim: Simulator | None = None,
        on_delivered: Callable[[int, int, Frame], None] | None = None,
    ):
        self.positions = [(float(x), float(y)) for x, y in positions]
        self.radio = radio or RadioConfig()
        self.mac_cfg = mac or MacConfig()
        self.arp_cfg = arp or ArpConfig()
        self.sim = sim or Simulator()
        self.rngs = RngStreams(seed)
        self.tracer = tracer or NULL_TRACER
        self.on_delivered = on_delivered
        self.channel = Channel(self.sim, self.positions, self.radio, self.tracer)
        self._uid = 0
        self.nodes = [Node(i, self) for i in range(len(self.positions))]
        self.by_address = {n.address: n for n in self.nodes}

    def new_uid(self) -> int:
        self._uid += 1
        return self._uid

    def explore(self, src: int, dst: int) -> None:
        """Start an ARP resolution at ``src`` for ``dst`` with no data behind it."""
        self.nodes[src].host.resolve(dst)

    def path(self, src: int, dst: int) -> list[int] | None:
        """Hop sequence src..dst obtained by following LT next hops toward ``dst``."""
        target = self.nodes[dst].address
        now = self.sim.now
        hops = [src]
        current = src
        while current != dst:
            nh = self.nodes[current].relay.lookup(target, now)
            if nh is None:
                return None
            current = self.by_address[nh].index
            if current in hops:
                raise RuntimeError(f"forwarding loop through {hops + [current]}")
            hops.append(current)
        return hops

    def lt_walk(self, start: int, locked: int) -> tuple[list[int], bool]:
        """Follow next hops for ``locked`` from ``start``; returns (walk, revisited)."""
        target = self.nodes[locked].address
        now = self.sim.now
        walk = [start]
        seen = {start}
        current = start
        while current != locked:
            nh = self.nodes[current].relay.lookup(target, now)
            if nh is None:
                return walk, False
            current = self.by_address[nh].index
            if current in seen:
                walk.append(current)
                return walk, True
            seen.add(current)
            walk.append(current)
        return walk, False

    def dump_tables(self) -> str:
        rows = ["node,locked_mac,next_hop,learned_at,refreshed_at"]
        for node in self.nodes:
            rows.extend(node.relay.tables.dump_rows(node.index))
        return "\n".join(rows) + "\n"
