"""IEEE 802.11 DCF, simplified.

Unicast frames go through RTS/CTS/DATA/ACK with binary exponential backoff.
Broadcasts get a uniform jitter, carrier sense for DIFS, and a single
unacknowledged transmission.
"""

from __future__ import annotations

import enum
import random
from collections import Counter, deque
from dataclasses import dataclass
from typing import Callable

from .engine import Simulator
from .frames import ACK_LEN, BROADCAST, CTS_LEN, Frame, FrameKind, MacAddress, make_control
from .radio import Channel
from .trace import NULL_TRACER, Tracer


@dataclass(frozen=True)
class MacConfig:
    cw_min: int = 15
    cw_max: int = 1023
    retry_limit: int = 7
    queue_capacity: int = 14
    slot_ns: int = 20_000
    sifs_ns: int = 10_000
    difs_ns: int = 50_000
    max_jitter_ns: int = 5_000_000

    def __post_init__(self) -> None:
        if not 0 <= self.cw_min <= self.cw_max:
            raise ValueError("need 0 <= cw_min <= cw_max")
        if self.queue_capacity < 1:
            raise ValueError("queue_capacity must be at least 1")
        if self.max_jitter_ns < 0 or self.retry_limit < 0:
            raise ValueError("max_jitter_ns and retry_limit must be non-negative")


class EnqueueResult(enum.Enum):
    QUEUED = "queued"
    DROPPED_QUEUE_FULL = "dropped_queue_full"


IDLE, JITTER, CONTEND, TX, WAIT_CTS, WAIT_ACK = range(6)
_RESPONSIVE = (IDLE, JITTER, CONTEND)


class Dcf:
    """One node's MAC. The queue occupancy includes the frame in service."""

    def __init__(
        self,
        index: int,
        address: MacAddress,
        sim: Simulator,
        channel: Channel,
        cfg: MacConfig,
        jitter_rng: random.Random,
        backoff_rng: random.Random,
        deliver: Callable[[Frame], None],
        tracer: Tracer = NULL_TRACER,
    ):
        self.index = index
        self.address = address
        self.sim = sim
        self.channel = channel
        self.cfg = cfg
        self.jitter_rng = jitter_rng
        self.backoff_rng = backoff_rng
        self.deliver = deliver
        self.tracer = tracer
        self.queue: deque[Frame] = deque()
        self.phase = IDLE
        self.cw = cfg.cw_min
        self.retries = 0
        self.backoff = 0
        self._bcast = False
        self._draw_on_defer = False
        self._timer = None
        self._anchor = 0
        self._busy = False
        self.nav_until = 0
        self._last_rx_uid: dict[MacAddress, int] = {}
        self.drops: Counter[str] = Counter()
        self.sent = 0
        self.jitter_samples: list[int] | None = None
        air = channel.radio.airtime_ns
        self._cts_air = air(CTS_LEN)
        self._ack_air = air(ACK_LEN)
        channel.attach(index, self)

    # queue ---------------------------------------------------------------

    def enqueue(self, frame: Frame) -> EnqueueResult:
        if len(self.queue) >= self.cfg.queue_capacity:
            self._drop(frame, "queue_full")
            return EnqueueResult.DROPPED_QUEUE_FULL
        self.queue.append(frame)
        if self.phase == IDLE:
            self._start_service()
        return EnqueueResult.QUEUED

    def _drop(self, frame: Frame, reason: str) -> None:
        self.drops[reason] += 1
        self.tracer.event(self.sim.now, self.index, "drop." + reason, frame)

    def _start_service(self) -> None:
        head = self.queue[0]
        self.retries = 0
        self.cw = self.cfg.cw_min
        self._bcast = head.addresses.receiver == BROADCAST
        if self._bcast and self.cfg.max_jitter_ns > 0:
            self.phase = JITTER
            delay = int(self.jitter_rng.random() * self.cfg.max_jitter_ns)
            if self.jitter_samples is not None:
                self.jitter_samples.append(delay)
            self._timer = self.sim.schedule_in(delay, self._begin_contention)
        else:
            self._begin_contention()

    def _complete(self) -> None:
        self.queue.popleft()
        self.phase = IDLE
        self._timer = None
        if self.queue:
            self._start_service()

    # channel access ----------------------------------------------------------

    def _begin_contention(self) -> None:
        self.phase = CONTEND
        self._timer = None
        if self._bcast:
            self.backoff = 0
            self._draw_on_defer = True
        else:
            self.backoff = self.backoff_rng.randint(0, self.cw)
            self._draw_on_defer = False
        if self._busy:
            self._defer()
        else:
            self._arm()

    def _defer(self) -> None:
        # a broadcast that finds the medium busy falls back to a random backoff
        if self._draw_on_defer and self.backoff == 0:
            self.backoff = self.backoff_rng.randint(0, self.cw)
        self._draw_on_defer = False

    def _arm(self) -> None:
        cfg = self.cfg
        self._anchor = self.sim.now
        self._timer = self.sim.schedule_in(cfg.difs_ns + self.backoff * cfg.slot_ns, self._access)

    def medium_changed(self) -> None:
        ch = self.channel
        busy = ch.sense[self.index] > 0 or ch.transmitting[self.index] or self.nav_until > self.sim.now
        if busy == self._busy:
            return
        self._busy = busy
        if self.phase != CONTEND:
            return
        if busy:
            if self._timer is not None:
                self.sim.cancel(self._timer)
                self._timer = None
                elapsed = self.sim.now - self._anchor - self.cfg.difs_ns
                if elapsed > 0:
                    self.backoff -= min(self.backoff, elapsed // self.cfg.slot_ns)
                self._defer()
        elif self._timer is None:
            self._arm()

    def is_busy(self) -> bool:
        return self._busy

    def _access(self) -> None:
        self._timer = None
        head = self.queue[0]
        self.phase = TX
        if self._bcast:
            self._transmit(head)
            return
        sifs = self.cfg.sifs_ns
        nav = 3 * sifs + self._cts_air + self.channel.airtime_ns(head) + self._ack_air
        rts = make_control(FrameKind.RTS, self.address, head.addresses.receiver, head.uid, nav)
        self._transmit(rts)

    def _transmit(self, frame: Frame) -> None:
        self.channel.transmit(self.index, frame)
        self.medium_changed()

    def on_tx_end(self, frame: Frame) -> None:
        """Called by the channel when our own frame leaves the air."""
        self.medium_changed()
        kind = frame.kind
        if kind is FrameKind.RTS:
            self.phase = WAIT_CTS
            self._timer = self.sim.schedule_in(
                self.cfg.sifs_ns + self._cts_air + self.cfg.slot_ns, self._attempt_failed
            )
        elif kind is FrameKind.CTS or kind is FrameKind.ACK:
            return
        elif self._bcast:
            self.sent += 1
            self._complete()
        else:
            self.phase = WAIT_ACK
            self._timer = self.sim.schedule_in(
                self.cfg.sifs_ns + self._ack_air + self.cfg.slot_ns, self._attempt_failed
            )

    def _attempt_failed(self) -> None:
        self._timer = None
        self.retries += 1
        if self.retries > self.cfg.retry_limit:
            self._drop(self.queue[0], "retry_limit")
            self._complete()
            return
        self.cw = min(2 * self.cw + 1, self.cfg.cw_max)
        self._begin_contention()

    def _send_data(self) -> None:
        self._timer = None
        if self.channel.transmitting[self.index]:
            self._attempt_failed()
            return
        self._transmit(self.queue[0])

    def _respond(self, frame: Frame) -> None:
        if not self.channel.transmitting[self.index]:
            self._transmit(frame)

    def _set_nav(self, until: int) -> None:
        if self.channel.radio.ideal or until <= self.nav_until:
            return
        self.nav_until = until
        self.sim.schedule(until, self.medium_changed)
        self.medium_changed()

    # receive path ------------------------------------------------------------

    def on_receive(self, frame: Frame) -> None:
        """A frame decoded by the channel (already filtered to us, broadcast, or RTS/CTS)."""
        kind = frame.kind
        me = self.address
        a = frame.addresses
        now = self.sim.now
        if kind is FrameKind.RTS:
            if a.receiver != me:
                self._set_nav(now + frame.duration_ns)
            elif self.phase in _RESPONSIVE and self.nav_until <= now:
                cts = make_control(
                    FrameKind.CTS, me, a.transmitter, frame.uid,
                    frame.duration_ns - self.cfg.sifs_ns - self._cts_air,
                )
                self.sim.schedule_in(self.cfg.sifs_ns, self._respond, cts)
        elif kind is FrameKind.CTS:
            if a.receiver != me:
                self._set_nav(now + frame.duration_ns)
            elif (self.phase == WAIT_CTS and self._timer is not None
                  and a.transmitter == self.queue[0].addresses.receiver):
                self.sim.cancel(self._timer)
                self.phase = TX
                self._timer = self.sim.schedule_in(self.cfg.sifs_ns, self._send_data)
        elif kind is FrameKind.ACK:
            if (a.receiver == me and self.phase == WAIT_ACK and self._timer is not None
                    and a.transmitter == self.queue[0].addresses.receiver):
                self.sim.cancel(self._timer)
                self.sent += 1
                self._complete()
        elif a.receiver == BROADCAST:
            self.deliver(frame)
        elif a.receiver == me:
            ack = make_control(FrameKind.ACK, me, a.transmitter, frame.uid)
            self.sim.schedule_in(self.cfg.sifs_ns, self._respond, ack)
            if self._last_rx_uid.get(a.transmitter) == frame.uid:
                return  # retransmission after a lost ACK
            self._last_rx_uid[a.transmitter] = frame.uid
            self.deliver(frame)
