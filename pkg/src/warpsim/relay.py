"""wARP-Path forwarding: node locking in the Learning/Lookup and Blocking tables.

Both tables key on the logical source MAC. The Learning Table (LT) maps it to
the neighbour that delivered the first copy; the Blocking Table (BT) keeps the
lock that makes later copies of the same exploration get discarded.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Generic, Hashable, TypeVar

from .engine import NS_PER_S, format_time
from .frames import BROADCAST, Frame, FrameKind, MacAddress

LT_AGING_NS = 120 * NS_PER_S
BT_BLOCKING_NS = 1 * NS_PER_S

Hop = TypeVar("Hop", bound=Hashable)


class LearnResult(enum.Enum):
    ACCEPTED = "accepted"
    BLOCKED = "blocked"


class Action(enum.Enum):
    DELIVER_UP = "deliver_up"
    FORWARD = "forward"
    DELIVER_UP_AND_FORWARD = "deliver_up_and_forward"
    DISCARD = "discard"


@dataclass(slots=True)
class LearningTableEntry(Generic[Hop]):
    locked_mac: MacAddress
    next_hop: Hop
    learned_at: int
    refreshed_at: int


@dataclass(slots=True)
class BlockingTableEntry:
    locked_mac: MacAddress
    blocked_at: int


@dataclass(frozen=True, slots=True)
class RelayDecision:
    action: Action
    next_hop: MacAddress | None = None

    def __post_init__(self) -> None:
        if self.action in (Action.FORWARD, Action.DELIVER_UP_AND_FORWARD) and self.next_hop is None:
            raise ValueError(f"{self.action.value} needs a next hop")


DISCARD = RelayDecision(Action.DISCARD)
DELIVER_UP = RelayDecision(Action.DELIVER_UP)


class LockingTables(Generic[Hop]):
    """LT/BT pair. The next hop is a neighbour MAC on radios, a port index on wires.

    Entries are aged lazily: stale ones are ignored on lookup and overwritten
    on learning, and ``age_tables`` evicts them on demand.
    """

    def __init__(self, lt_aging_ns: int = LT_AGING_NS, bt_blocking_ns: int = BT_BLOCKING_NS):
        self.lt_aging_ns = lt_aging_ns
        self.bt_blocking_ns = bt_blocking_ns
        self.lt: dict[MacAddress, LearningTableEntry[Hop]] = {}
        self.bt: dict[MacAddress, BlockingTableEntry] = {}

    def _lt_live(self, entry: LearningTableEntry, now: int) -> bool:
        return now - entry.refreshed_at <= self.lt_aging_ns

    def is_blocked(self, src: MacAddress, now: int) -> bool:
        entry = self.bt.get(src)
        return entry is not None and now - entry.blocked_at <= self.bt_blocking_ns

    def learn_or_block(self, src: MacAddress, next_hop: Hop, now: int) -> LearnResult:
        if self.is_blocked(src, now):
            entry = self.lt.get(src)
            if entry is not None and entry.next_hop == next_hop and self._lt_live(entry, now):
                entry.refreshed_at = now
            return LearnResult.BLOCKED
        self.lt[src] = LearningTableEntry(src, next_hop, now, now)
        self.bt[src] = BlockingTableEntry(src, now)
        return LearnResult.ACCEPTED

    def lookup(self, dst: MacAddress, now: int, refresh: bool = False) -> Hop | None:
        if dst == BROADCAST:
            return None
        entry = self.lt.get(dst)
        if entry is None or not self._lt_live(entry, now):
            return None
        if refresh:
            entry.refreshed_at = now
        return entry.next_hop

    def age_tables(self, now: int) -> int:
        stale_lt = [k for k, e in self.lt.items() if not self._lt_live(e, now)]
        stale_bt = [k for k, e in self.bt.items() if now - e.blocked_at > self.bt_blocking_ns]
        for k in stale_lt:
            del self.lt[k]
        for k in stale_bt:
            del self.bt[k]
        return len(stale_lt) + len(stale_bt)

    def dump_rows(self, node: object) -> list[str]:
        """CSV rows ``node,locked_mac,next_hop,learned_at,refreshed_at``."""
        return [
            f"{node},{e.locked_mac},{e.next_hop},{format_time(e.learned_at)},{format_time(e.refreshed_at)}"
            for e in sorted(self.lt.values(), key=lambda e: e.locked_mac)
        ]


class Relay:
    """Per-node relay unit running the wARP-Path receive procedure."""

    def __init__(self, address: MacAddress, tables: LockingTables[MacAddress] | None = None):
        self.address = address
        self.tables: LockingTables[MacAddress] = tables if tables is not None else LockingTables()

    def learn_or_block(self, src: MacAddress, transmitter: MacAddress, now: int) -> LearnResult:
        return self.tables.learn_or_block(src, transmitter, now)

    def lookup(self, dst: MacAddress, now: int, refresh: bool = False) -> MacAddress | None:
        return self.tables.lookup(dst, now, refresh)

    def age_tables(self, now: int) -> int:
        return self.tables.age_tables(now)

    def process_frame(self, f: Frame, now: int) -> RelayDecision:
        me = self.address
        src = f.addresses.source
        if src == me:
            return DISCARD
        dst = f.addresses.destination
        learned = self.tables.learn_or_block(src, f.addresses.transmitter, now)
        if dst == BROADCAST:
            next_hop = BROADCAST if learned is LearnResult.ACCEPTED else None
        elif dst == me:
            return DELIVER_UP
        else:
            next_hop = self.tables.lookup(dst, now, refresh=f.kind is FrameKind.DATA)
        if next_hop is None:
            return DISCARD
        if dst == BROADCAST:
            return RelayDecision(Action.DELIVER_UP_AND_FORWARD, BROADCAST)
        return RelayDecision(Action.FORWARD, next_hop)
