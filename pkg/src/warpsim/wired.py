"""Wired ARP-Path switches: port locking, flood on every port except the input.

Links are lossless full-duplex pipes with a fixed latency. Each switch has a
co-located host on ``LOCAL_PORT`` so the same graph can be compared one to one
with a radio network where every node is both host and relay.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .engine import NS_PER_S, Simulator
from .frames import BROADCAST, Frame, FrameKind, MacAddress, make_arp_reply, make_arp_request
from .relay import BT_BLOCKING_NS, LT_AGING_NS, LearnResult, LockingTables

LOCAL_PORT = -1


@dataclass(frozen=True, slots=True)
class WiredDecision:
    deliver_up: bool
    ports: frozenset[int] = frozenset()


_DROP = WiredDecision(False)


class WiredSwitch:
    def __init__(self, index: int, neighbors: list[int], lt_aging_ns=LT_AGING_NS, bt_blocking_ns=BT_BLOCKING_NS):
        self.index = index
        self.address = MacAddress.for_node(index)
        # port i leads to neighbors[i]; sorted so flooding order is reproducible
        self.neighbors = sorted(neighbors)
        self.tables: LockingTables[int] = LockingTables(lt_aging_ns, bt_blocking_ns)

    def port_to(self, neighbor: int) -> int:
        return self.neighbors.index(neighbor)

    def process_frame(self, f: Frame, input_port: int, now: int) -> WiredDecision:
        src, dst = f.addresses.source, f.addresses.destination
        all_ports = range(len(self.neighbors))
        if input_port == LOCAL_PORT:
            if dst == BROADCAST:
                return WiredDecision(False, frozenset(all_ports))
            port = self.tables.lookup(dst, now, refresh=f.kind is FrameKind.DATA)
            return _DROP if port is None else WiredDecision(False, frozenset({port}))
        if src == self.address:
            return _DROP
        learned = self.tables.learn_or_block(src, input_port, now)
        if dst == BROADCAST:
            if learned is LearnResult.BLOCKED:
                return _DROP
            return WiredDecision(True, frozenset(p for p in all_ports if p != input_port))
        if dst == self.address:
            return WiredDecision(True)
        port = self.tables.lookup(dst, now, refresh=f.kind is FrameKind.DATA)
        return _DROP if port is None else WiredDecision(False, frozenset({port}))


def process_frame_wired(switch: WiredSwitch, f: Frame, input_port: int, now: int) -> WiredDecision:
    return switch.process_frame(f, input_port, now)


@dataclass
class WiredNetwork:
    """Switch graph driven by the event engine. ``latency_ns`` maps undirected links."""

    edges: list[tuple[int, int]]
    default_latency_ns: int = 1_000_000
    latency_ns: dict[tuple[int, int], int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        adj: dict[int, list[int]] = {}
        for a, b in self.edges:
            adj.setdefault(a, []).append(b)
            adj.setdefault(b, []).append(a)
        self.sim = Simulator()
        self.switches = {i: WiredSwitch(i, nbrs) for i, nbrs in sorted(adj.items())}
        self._uid = 0
        self.delivered: list[tuple[int, int]] = []  # (switch index, uid) handed to local hosts

    def _latency(self, a: int, b: int) -> int:
        return self.latency_ns.get((a, b), self.latency_ns.get((b, a), self.default_latency_ns))

    def _send(self, sw: WiredSwitch, f: Frame, ports: frozenset[int]) -> None:
        for port in sorted(ports):
            peer = sw.neighbors[port]
            peer_port = self.switches[peer].port_to(sw.index)
            self.sim.schedule_in(self._latency(sw.index, peer), self._arrive, peer, f, peer_port)

    def _arrive(self, index: int, f: Frame, input_port: int) -> None:
        sw = self.switches[index]
        decision = sw.process_frame(f, input_port, self.sim.now)
        if decision.deliver_up:
            self.delivered.append((index, f.uid))
            self._host_receive(sw, f)
        if decision.ports:
            self._send(sw, f, decision.ports)

    def _host_receive(self, sw: WiredSwitch, f: Frame) -> None:
        if f.kind is FrameKind.ARP_REQUEST and f.arp_target == sw.index:
            self._uid += 1
            reply = make_arp_reply(
                sw.address, f.addresses.source, BROADCAST, sender_logical=sw.index,
                target_logical=f.arp_sender, uid=self._uid,
            )
            self.originate(sw.index, reply)

    def originate(self, index: int, f: Frame) -> None:
        sw = self.switches[index]
        decision = sw.process_frame(f, LOCAL_PORT, self.sim.now)
        self._send(sw, f, decision.ports)

    def explore(self, src: int, dst: int, horizon_ns: int = NS_PER_S // 2) -> list[int] | None:
        """ARP exchange from ``src`` for ``dst``; returns the locked hop sequence src..dst."""
        self._uid += 1
        req = make_arp_request(self.switches[src].address, dst, sender_logical=src, uid=self._uid)
        self.originate(src, req)
        self.sim.run_until(self.sim.now + horizon_ns)
        return self.path(src, dst)

    def path(self, src: int, dst: int) -> list[int] | None:
        target = self.switches[dst].address
        hops = [src]
        current = src
        while current != dst:
            port = self.switches[current].tables.lookup(target, self.sim.now)
            if port is None:
                return None
            current = self.switches[current].neighbors[port]
            if current in hops:
                raise RuntimeError(f"forwarding loop through {hops + [current]}")
            hops.append(current)
        return hops
