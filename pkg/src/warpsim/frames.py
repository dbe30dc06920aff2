"""Layer-2 addresses and the four-address frame used on the air.

Physical addresses (receiver/transmitter) change at every hop; logical
addresses (destination/source) stay fixed end to end.
"""

from __future__ import annotations

import dataclasses
import enum
import itertools
from dataclasses import dataclass


class FrameError(ValueError):
    pass


class MacAddress(int):
    """48-bit hardware address. Subclasses int so it hashes and compares fast."""

    __slots__ = ()

    def __new__(cls, value: int) -> "MacAddress":
        if not 0 <= value <= 0xFFFFFFFFFFFF:
            raise FrameError(f"MAC address out of range: {value:#x}")
        return super().__new__(cls, value)

    @classmethod
    def for_node(cls, index: int) -> "MacAddress":
        # locally administered unicast block 02:00:00:xx:xx:xx
        return cls(0x020000000000 | (index + 1))

    @classmethod
    def parse(cls, text: str) -> "MacAddress":
        parts = text.split(":")
        if len(parts) != 6:
            raise FrameError(f"bad MAC address {text!r}")
        return cls(int("".join(parts), 16))

    def __str__(self) -> str:
        raw = f"{int(self):012x}"
        return ":".join(raw[i : i + 2] for i in range(0, 12, 2))

    def __repr__(self) -> str:
        return f"MacAddress('{self}')"


BROADCAST = MacAddress(0xFFFFFFFFFFFF)


class FrameKind(enum.Enum):
    ARP_REQUEST = "arp_request"
    ARP_REPLY = "arp_reply"
    DATA = "data"
    RTS = "rts"
    CTS = "cts"
    ACK = "ack"

    @property
    def is_control(self) -> bool:
        return self in _CONTROL


_CONTROL = frozenset({FrameKind.RTS, FrameKind.CTS, FrameKind.ACK})

# 802.11 data header + FCS, and the fixed control frame sizes
DATA_HEADER_LEN = 34
RTS_LEN = 20
CTS_LEN = 14
ACK_LEN = 14
ARP_PAYLOAD_LEN = 28


@dataclass(frozen=True, slots=True)
class AddressBlock:
    receiver: MacAddress
    transmitter: MacAddress
    destination: MacAddress
    source: MacAddress

    def __post_init__(self) -> None:
        if self.transmitter == BROADCAST:
            raise FrameError("transmitter address cannot be broadcast")
        if self.source == BROADCAST:
            raise FrameError("source address cannot be broadcast")


@dataclass(frozen=True, slots=True)
class Frame:
    kind: FrameKind
    addresses: AddressBlock
    payload_len: int
    header_len: int
    uid: int
    origin_ns: int = 0
    # NAV reservation carried by RTS/CTS
    duration_ns: int = 0
    # ARP protocol addresses (node indices stand in for IPv4 addresses)
    arp_sender: int | None = None
    arp_target: int | None = None
    session: int | None = None

    def __post_init__(self) -> None:
        if self.payload_len < 0:
            raise FrameError("payload_len must be non-negative")
        dst = self.addresses.destination
        if self.kind is FrameKind.ARP_REQUEST and dst != BROADCAST:
            raise FrameError("ARP request must be broadcast")
        if self.kind in (FrameKind.ARP_REPLY, FrameKind.DATA) and dst == BROADCAST:
            raise FrameError(f"{self.kind.value} frame needs a unicast destination")

    @property
    def length(self) -> int:
        """On-air length in bytes."""
        return self.header_len + self.payload_len

    @property
    def origin_time(self) -> float:
        return self.origin_ns / 1e9

    # shorthand used all over the forwarding path
    @property
    def source(self) -> MacAddress:
        return self.addresses.source

    @property
    def destination(self) -> MacAddress:
        return self.addresses.destination

    @property
    def transmitter(self) -> MacAddress:
        return self.addresses.transmitter

    @property
    def receiver(self) -> MacAddress:
        return self.addresses.receiver


_uids = itertools.count(1)


def next_uid() -> int:
    return next(_uids)


def make_arp_request(
    src: MacAddress, target_logical: int, *, sender_logical: int | None = None, uid: int | None = None
) -> Frame:
    return Frame(
        kind=FrameKind.ARP_REQUEST,
        addresses=AddressBlock(receiver=BROADCAST, transmitter=src, destination=BROADCAST, source=src),
        payload_len=ARP_PAYLOAD_LEN,
        header_len=DATA_HEADER_LEN,
        uid=next_uid() if uid is None else uid,
        arp_sender=sender_logical,
        arp_target=target_logical,
    )


def make_arp_reply(
    src: MacAddress,
    dst: MacAddress,
    next_hop: MacAddress,
    *,
    sender_logical: int | None = None,
    target_logical: int | None = None,
    uid: int | None = None,
) -> Frame:
    return Frame(
        kind=FrameKind.ARP_REPLY,
        addresses=AddressBlock(receiver=next_hop, transmitter=src, destination=dst, source=src),
        payload_len=ARP_PAYLOAD_LEN,
        header_len=DATA_HEADER_LEN,
        uid=next_uid() if uid is None else uid,
        arp_sender=sender_logical,
        arp_target=target_logical,
    )


def make_data(
    src: MacAddress,
    dst: MacAddress,
    next_hop: MacAddress,
    payload_len: int,
    uid: int,
    origin_ns: int,
    session: int | None = None,
) -> Frame:
    return Frame(
        kind=FrameKind.DATA,
        addresses=AddressBlock(receiver=next_hop, transmitter=src, destination=dst, source=src),
        payload_len=payload_len,
        header_len=DATA_HEADER_LEN,
        uid=uid,
        origin_ns=origin_ns,
        session=session,
    )


_CONTROL_LEN = {FrameKind.RTS: RTS_LEN, FrameKind.CTS: CTS_LEN, FrameKind.ACK: ACK_LEN}


def make_control(
    kind: FrameKind, transmitter: MacAddress, receiver: MacAddress, uid: int, duration_ns: int = 0
) -> Frame:
    size = _CONTROL_LEN[kind]
    return Frame(
        kind=kind,
        addresses=AddressBlock(
            receiver=receiver, transmitter=transmitter, destination=receiver, source=transmitter
        ),
        payload_len=0,
        header_len=size,
        uid=uid,
        duration_ns=duration_ns,
    )


def rewrite_for_hop(f: Frame, new_transmitter: MacAddress, new_receiver: MacAddress) -> Frame:
    """Swap the physical hop addresses, keeping logical endpoints and uid."""
    if new_transmitter == f.addresses.source:
        # a relay never forwards its own frames; seeing this means a loop
        raise FrameError(f"node {new_transmitter} asked to forward its own frame uid={f.uid}")
    if f.addresses.transmitter == new_transmitter and f.addresses.receiver == new_receiver:
        return f
    addrs = dataclasses.replace(f.addresses, transmitter=new_transmitter, receiver=new_receiver)
    return dataclasses.replace(f, addresses=addrs)


def decapsulate_for_upper(f: Frame, me: MacAddress) -> Frame:
    """Copy logical addresses into the physical slots before handing up."""
    dst = f.addresses.destination
    if dst != me and dst != BROADCAST:
        raise FrameError(f"frame for {dst} cannot be decapsulated at {me}")
    a = f.addresses
    if a.receiver == dst and a.transmitter == a.source:
        return f
    return dataclasses.replace(f, addresses=AddressBlock(dst, a.source, dst, a.source))


def trace_fields(f: Frame) -> str:
    a = f.addresses
    return f"{f.kind.value},{f.uid},{a.source},{a.destination},{a.transmitter},{a.receiver},{f.length}"
