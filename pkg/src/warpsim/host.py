"""Host stack on every node: ARP resolution and datagram endpoints."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable

from .engine import NS_PER_S, Event
from .frames import Frame, FrameKind, MacAddress, make_arp_reply, make_arp_request, make_data

if TYPE_CHECKING:
    from .network import Node


@dataclass(frozen=True)
class ArpConfig:
    retry_count: int = 5
    retry_timeout_ns: int = 200_000_000
    cache_timeout_ns: int = 120 * NS_PER_S


@dataclass(slots=True)
class AppPacket:
    uid: int
    size: int
    origin_ns: int
    destination: int
    session: int | None = None


@dataclass
class _Resolution:
    target: int
    buffered: AppPacket | None
    sent: int = 0
    timer: Event | None = None


@dataclass
class ArpResolverState:
    cache: dict[int, tuple[MacAddress, int]] = field(default_factory=dict)  # logical -> (mac, learned_at)
    pending: dict[int, _Resolution] = field(default_factory=dict)


class Host:
    """ARP client/server plus the UDP-like sink.

    While a resolution is outstanding only the newest packet is buffered;
    anything it displaces is dropped.
    """

    def __init__(self, node: "Node", cfg: ArpConfig, on_delivered: Callable[[int, int, Frame], None] | None = None):
        self.node = node
        self.cfg = cfg
        self.state = ArpResolverState()
        self.on_delivered = on_delivered
        self.requests_sent: Counter[int] = Counter()
        self.replies_received: Counter[int] = Counter()
        # uid of every request sent, per target
        self.request_uids: defaultdict[int, list[int]] = defaultdict(list)
        self.on_drop: Callable[[AppPacket, str], None] | None = None

    @property
    def logical(self) -> int:
        return self.node.index

    # sending ---------------------------------------------------------------

    def cached(self, target: int, now: int) -> MacAddress | None:
        entry = self.state.cache.get(target)
        if entry is None:
            return None
        mac, learned_at = entry
        if now - learned_at > self.cfg.cache_timeout_ns:
            del self.state.cache[target]
            return None
        return mac

    def resolve_and_send(self, target: int, packet: AppPacket) -> None:
        node = self.node
        now = node.sim.now
        mac = self.cached(target, now)
        if mac is not None:
            next_hop = node.relay.lookup(mac, now, refresh=True)
            if next_hop is not None:
                node.send(make_data(node.address, mac, next_hop, packet.size, packet.uid,
                                    packet.origin_ns, packet.session))
                return
            # cache outlived the path; resolve again
            del self.state.cache[target]
        pending = self.state.pending.get(target)
        if pending is not None:
            if pending.buffered is not None:
                self._dropped(pending.buffered, "arp_buffer")
            pending.buffered = packet
            return
        self.resolve(target, packet)

    def resolve(self, target: int, packet: AppPacket | None = None) -> None:
        """Start a resolution attempt (up to ``retry_count`` requests)."""
        if target in self.state.pending:
            return
        pending = _Resolution(target, packet)
        self.state.pending[target] = pending
        self._send_request(pending)

    def _send_request(self, pending: _Resolution) -> None:
        node = self.node
        req = make_arp_request(node.address, pending.target, sender_logical=self.logical, uid=node.network.new_uid())
        pending.sent += 1
        self.requests_sent[pending.target] += 1
        self.request_uids[pending.target].append(req.uid)
        node.tracer.event(node.sim.now, node.index, "arp_request", req)
        node.send(req)
        pending.timer = node.sim.schedule_in(self.cfg.retry_timeout_ns, self._retry, pending)

    def _retry(self, pending: _Resolution) -> None:
        if self.state.pending.get(pending.target) is not pending:
            return
        if pending.sent < self.cfg.retry_count:
            self._send_request(pending)
            return
        del self.state.pending[pending.target]
        if pending.buffered is not None:
            self._dropped(pending.buffered, "arp_fail")

    def _dropped(self, packet: AppPacket, reason: str) -> None:
        node = self.node
        node.tracer.app_event(node.sim.now, node.index, "drop." + reason, packet.uid,
                              node.address, MacAddress.for_node(packet.destination), packet.size)
        if self.on_drop is not None:
            self.on_drop(packet, reason)

    # receiving ---------------------------------------------------------------

    def receive(self, frame: Frame) -> None:
        """Frame already decapsulated by the relay."""
        node = self.node
        now = node.sim.now
        kind = frame.kind
        if kind is FrameKind.ARP_REQUEST:
            if frame.arp_target != self.logical:
                return
            requester = frame.addresses.source
            if frame.arp_sender is not None:
                self.state.cache[frame.arp_sender] = (requester, now)
            next_hop = node.relay.lookup(requester, now)
            if next_hop is None:
                return
            reply = make_arp_reply(node.address, requester, next_hop, sender_logical=self.logical,
                                   target_logical=frame.arp_sender, uid=node.network.new_uid())
            node.tracer.event(now, node.index, "arp_reply", reply)
            node.send(reply)
        elif kind is FrameKind.ARP_REPLY:
            if frame.addresses.destination != node.address or frame.arp_sender is None:
                return
            target = frame.arp_sender
            self.state.cache[target] = (frame.addresses.source, now)
            self.replies_received[target] += 1
            node.tracer.event(now, node.index, "arp_reply_rx", frame)
            pending = self.state.pending.pop(target, None)
            if pending is not None:
                node.sim.cancel(pending.timer)
                if pending.buffered is not None:
                    self.resolve_and_send(target, pending.buffered)
        elif kind is FrameKind.DATA:
            if self.on_delivered is not None:
                self.on_delivered(node.index, now, frame)
