"""Free-space radio channel with SINR-based reception and energy-detect carrier sense."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .engine import NS_PER_S, Simulator
from .frames import BROADCAST, Frame, FrameKind

SPEED_OF_LIGHT = 299_792_458.0


def mw_to_dbm(mw: float) -> float:
    return 10.0 * math.log10(mw)


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


@dataclass(frozen=True)
class RadioConfig:
    tx_power_mw: float = 2.0
    sensitivity_dbm: float = -85.0
    energy_detect_dbm: float = -85.0
    sinr_threshold_db: float = 4.0
    noise_floor_dbm: float = -110.0
    carrier_freq_hz: float = 2.4e9
    bit_rate: float = 1e6
    bandwidth_hz: float = 2e6
    # DSSS long preamble + PLCP header
    preamble_ns: int = 192_000
    propagation_delay: bool = True
    # no interference, no carrier sense, no NAV: only half-duplex remains
    ideal: bool = False

    def __post_init__(self) -> None:
        for name in ("tx_power_mw", "sensitivity_dbm", "energy_detect_dbm", "sinr_threshold_db",
                     "noise_floor_dbm", "carrier_freq_hz"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.tx_power_mw <= 0:
            raise ValueError("tx_power_mw must be positive")
        if self.bit_rate <= 0:
            raise ValueError("bit_rate must be positive")

    @property
    def tx_power_dbm(self) -> float:
        return mw_to_dbm(self.tx_power_mw)

    def airtime_ns(self, length_bytes: int) -> int:
        bits = length_bytes * 8
        return self.preamble_ns + -(-bits * NS_PER_S // int(self.bit_rate))


def path_loss_db(distance: float, carrier_freq_hz: float = 2.4e9) -> float:
    """Free-space path loss; distances under 1 m are clamped to 1 m."""
    d = max(distance, 1.0)
    return (
        20.0 * math.log10(d)
        + 20.0 * math.log10(carrier_freq_hz)
        + 20.0 * math.log10(4.0 * math.pi / SPEED_OF_LIGHT)
    )


def received_power_dbm(distance: float, radio: RadioConfig) -> float:
    return radio.tx_power_dbm - path_loss_db(distance, radio.carrier_freq_hz)


def communication_range(radio: RadioConfig) -> float:
    """Distance at which received power falls to the sensitivity threshold."""
    budget = radio.tx_power_dbm - radio.sensitivity_dbm
    const = 20.0 * math.log10(radio.carrier_freq_hz) + 20.0 * math.log10(4.0 * math.pi / SPEED_OF_LIGHT)
    return 10.0 ** ((budget - const) / 20.0)


def distance(a: Sequence[float], b: Sequence[float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


@dataclass(frozen=True)
class Transmission:
    sender: int
    frame: Frame
    start: int
    end: int
    origin: tuple[float, float]

    def power_at_dbm(self, position: Sequence[float], radio: RadioConfig) -> float:
        return received_power_dbm(distance(self.origin, position), radio)


DECODED = "decoded"
LOST = "lost"


def reception_outcome(
    rx_position: Sequence[float],
    tx: Transmission,
    concurrent: Iterable[Transmission],
    radio: RadioConfig,
) -> str:
    """Decide a reception from scratch, without the channel's incremental state.

    The worst instantaneous SINR over the frame must clear the threshold.
    """
    signal = tx.power_at_dbm(rx_position, radio)
    if signal < radio.sensitivity_dbm:
        return LOST
    overlapping = [o for o in concurrent if o is not tx and o.start < tx.end and o.end > tx.start]
    # interference only rises when an interferer starts, so check at each start
    checkpoints = {tx.start} | {max(o.start, tx.start) for o in overlapping}
    worst = 0.0
    for t in checkpoints:
        level = sum(dbm_to_mw(o.power_at_dbm(rx_position, radio)) for o in overlapping if o.start <= t < o.end)
        worst = max(worst, level)
    sinr_db = signal - mw_to_dbm(dbm_to_mw(radio.noise_floor_dbm) + worst)
    return DECODED if sinr_db >= radio.sinr_threshold_db else LOST


class _Tx:
    __slots__ = ("sender", "frame", "start", "end", "receptions")

    def __init__(self, sender: int, frame: Frame, start: int, end: int):
        self.sender = sender
        self.frame = frame
        self.start = start
        self.end = end
        self.receptions: list[_Reception] = []


class _Reception:
    __slots__ = ("node", "tx", "signal", "interference", "lost")

    def __init__(self, node: int, tx: _Tx, signal: float, interference: float):
        self.node = node
        self.tx = tx
        self.signal = signal
        self.interference = interference
        self.lost: str | None = None


class Channel:
    """Shared medium. Tracks every ongoing transmission and each node's locked reception.

    A node locks onto the first decodable frame that starts while it is idle;
    anything else arriving during that frame only adds interference. There is
    no capture of a later, stronger frame.
    """

    def __init__(self, sim: Simulator, positions: Sequence[Sequence[float]], radio: RadioConfig, tracer=None):
        self.sim = sim
        self.radio = radio
        self.positions = [(float(x), float(y)) for x, y in positions]
        self.tracer = tracer
        n = len(self.positions)
        self.n = n
        self.noise_mw = dbm_to_mw(radio.noise_floor_dbm)
        self.sinr_linear = 10.0 ** (radio.sinr_threshold_db / 10.0)
        self.power_mw = [[0.0] * n for _ in range(n)]
        self.prop_ns = [[0] * n for _ in range(n)]
        self.decode_nbrs: list[list[int]] = [[] for _ in range(n)]
        self.sense_nbrs: list[list[int]] = [[] for _ in range(n)]
        for s in range(n):
            for r in range(n):
                if r == s:
                    continue
                d = distance(self.positions[s], self.positions[r])
                dbm = received_power_dbm(d, radio)
                self.power_mw[s][r] = dbm_to_mw(dbm)
                if radio.propagation_delay:
                    self.prop_ns[s][r] = round(d / SPEED_OF_LIGHT * NS_PER_S)
                if dbm >= radio.sensitivity_dbm:
                    self.decode_nbrs[s].append(r)
                if dbm >= radio.energy_detect_dbm:
                    self.sense_nbrs[s].append(r)
        self.sense = [0] * n
        self.transmitting = [False] * n
        self.active: list[_Tx] = []
        # per node: receptions in progress (at most one unless the channel is ideal)
        self.rx_at: list[list[_Reception]] = [[] for _ in range(n)]
        self.receiving: list[_Reception] = []
        self.macs: list = [None] * n
        self.index_of: dict = {}
        self.transmissions = 0

    def attach(self, index: int, mac) -> None:
        self.macs[index] = mac
        self.index_of[mac.address] = index

    def neighbors(self, node: int) -> list[int]:
        return list(self.decode_nbrs[node])

    def airtime_ns(self, frame: Frame) -> int:
        return self.radio.airtime_ns(frame.length)

    def _loss(self, node: int, frame: Frame, reason: str) -> None:
        tr = self.tracer
        if tr is not None and tr.full:
            tr.frame_event(self.sim.now, node, "loss." + reason, frame)

    def transmit(self, sender: int, frame: Frame) -> int:
        """Put ``frame`` on the air from ``sender`` now; returns the airtime in ns."""
        if self.transmitting[sender]:
            raise RuntimeError(f"node {sender} is already transmitting")
        now = self.sim.now
        duration = self.radio.airtime_ns(frame.length)
        tx = _Tx(sender, frame, now, now + duration)
        self.transmissions += 1
        self.transmitting[sender] = True
        ideal = self.radio.ideal
        for rec in self.rx_at[sender]:
            if rec.lost is None:
                rec.lost = "half_duplex"
        power = self.power_mw[sender]
        if not ideal:
            noise, thr = self.noise_mw, self.sinr_linear
            for rec in self.receiving:
                r = rec.node
                if r == sender:
                    continue
                rec.interference += power[r]
                if rec.lost is None and rec.signal < thr * (noise + rec.interference):
                    rec.lost = "sinr"
        if self.tracer is not None and self.tracer.full:
            self.tracer.frame_event(now, sender, "tx_start", frame)
        for r in self.decode_nbrs[sender]:
            if self.transmitting[r]:
                self._loss(r, frame, "half_duplex")
                continue
            if ideal:
                rec = _Reception(r, tx, power[r], 0.0)
            else:
                if self.rx_at[r]:
                    self._loss(r, frame, "sinr")
                    continue
                interference = 0.0
                for other in self.active:
                    interference += self.power_mw[other.sender][r]
                if power[r] < self.sinr_linear * (self.noise_mw + interference):
                    self._loss(r, frame, "sinr")
                    continue
                rec = _Reception(r, tx, power[r], interference)
            self.rx_at[r].append(rec)
            self.receiving.append(rec)
            tx.receptions.append(rec)
        if frame.receiver != BROADCAST and self.tracer is not None and self.tracer.full:
            target = self.index_of.get(frame.receiver)
            if target is not None and target not in self.decode_nbrs[sender]:
                self._loss(target, frame, "below_sensitivity")
        self.active.append(tx)
        if not ideal:
            sense, macs = self.sense, self.macs
            for r in self.sense_nbrs[sender]:
                sense[r] += 1
                if sense[r] == 1:
                    macs[r].medium_changed()
        self.sim.schedule(tx.end, self._end, tx)
        return duration

    def _end(self, tx: _Tx) -> None:
        sender = tx.sender
        self.active.remove(tx)
        self.transmitting[sender] = False
        ideal = self.radio.ideal
        if not ideal:
            power = self.power_mw[sender]
            for rec in self.receiving:
                if rec.tx is not tx and rec.node != sender:
                    rec.interference -= power[rec.node]
        frame = tx.frame
        kind = frame.kind
        receiver = frame.receiver
        macs = self.macs
        prop = self.prop_ns[sender]
        sim = self.sim
        for rec in tx.receptions:
            r = rec.node
            self.rx_at[r].remove(rec)
            self.receiving.remove(rec)
            if rec.lost is not None:
                self._loss(r, frame, rec.lost)
                continue
            mac = macs[r]
            if receiver == BROADCAST or receiver == mac.address or kind is FrameKind.RTS or kind is FrameKind.CTS:
                sim.schedule_in(prop[r], mac.on_receive, frame)
        macs[sender].on_tx_end(frame)
        if not ideal:
            sense = self.sense
            for r in self.sense_nbrs[sender]:
                sense[r] -= 1
                if sense[r] == 0:
                    macs[r].medium_changed()
