"""Goodput ratio and end-to-end delay over per-packet trace records, plus CSV export."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

if TYPE_CHECKING:
    from .scenario import ScenarioResult


@dataclass(slots=True)
class TraceRecord:
    uid: int
    size: int
    generated_at: float
    source: int
    destination: int
    session: int | None = None
    delivered_at: float | None = None

    def __post_init__(self) -> None:
        if self.delivered_at is not None and self.delivered_at < self.generated_at:
            raise ValueError(f"packet {self.uid} delivered before it was generated")

    @property
    def delay(self) -> float | None:
        if self.delivered_at is None:
            return None
        return self.delivered_at - self.generated_at


def goodput_ratio(records: Iterable[TraceRecord], t: float) -> float:
    """Percent of application bytes generated by ``t`` that were delivered by ``t``."""
    generated = delivered = 0
    for r in records:
        if r.generated_at <= t:
            generated += r.size
        if r.delivered_at is not None and r.delivered_at <= t:
            delivered += r.size
    if generated == 0:
        return 0.0
    return 100.0 * delivered / generated


def avg_e2e_delay(records: Iterable[TraceRecord], t: float, host: int | None = None) -> float | None:
    total = 0.0
    n = 0
    for r in records:
        if r.delivered_at is None or r.delivered_at > t:
            continue
        if host is not None and r.destination != host:
            continue
        total += r.delivered_at - r.generated_at
        n += 1
    return total / n if n else None


def interval_bounds(t: float, dt: float = 1.0) -> tuple[float, float]:
    lo = dt * math.floor(t / dt)
    return lo, lo + dt


def interval_delay(records: Iterable[TraceRecord], t: float, dt: float = 1.0) -> float | None:
    """Mean delay of deliveries falling in the ``dt``-wide interval that contains ``t``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    lo, hi = interval_bounds(t, dt)
    total = 0.0
    n = 0
    for r in records:
        if r.delivered_at is not None and lo <= r.delivered_at < hi:
            total += r.delivered_at - r.generated_at
            n += 1
    return total / n if n else None


class Series:
    """Vectorised view of a record list for evaluating metrics on a time grid."""

    def __init__(self, records: Sequence[TraceRecord]):
        gen = np.array([r.generated_at for r in records], dtype=float)
        size = np.array([r.size for r in records], dtype=float)
        order = np.argsort(gen, kind="stable")
        self.gen_t = gen[order]
        self.gen_bytes = np.cumsum(size[order])
        got = [r for r in records if r.delivered_at is not None]
        got.sort(key=lambda r: (r.delivered_at, r.uid))
        self.rx_t = np.array([r.delivered_at for r in got], dtype=float)
        self.rx_bytes = np.cumsum(np.array([r.size for r in got], dtype=float))
        self.rx_delay = np.array([r.delivered_at - r.generated_at for r in got], dtype=float)
        self.rx_delay_cum = np.cumsum(self.rx_delay)
        self.rx_dst = np.array([r.destination for r in got], dtype=int)

    @staticmethod
    def _upto(times: np.ndarray, cum: np.ndarray, grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        idx = np.searchsorted(times, grid, side="right")
        padded = np.concatenate(([0.0], cum))
        return padded[idx], idx

    def goodput(self, grid: np.ndarray) -> np.ndarray:
        gen, _ = self._upto(self.gen_t, self.gen_bytes, grid)
        rx, _ = self._upto(self.rx_t, self.rx_bytes, grid)
        out = np.zeros_like(grid, dtype=float)
        np.divide(100.0 * rx, gen, out=out, where=gen > 0)
        return out

    def cumulative_delay(self, grid: np.ndarray) -> np.ndarray:
        total, n = self._upto(self.rx_t, self.rx_delay_cum, grid)
        out = np.full(grid.shape, np.nan)
        np.divide(total, n, out=out, where=n > 0)
        return out

    def interval_delay(self, starts: np.ndarray, dt: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
        """Mean delay and delivery count for each [start, start + dt) window."""
        lo = np.searchsorted(self.rx_t, starts, side="left")
        hi = np.searchsorted(self.rx_t, starts + dt, side="left")
        padded = np.concatenate(([0.0], self.rx_delay_cum))
        total = padded[hi] - padded[lo]
        n = hi - lo
        out = np.full(starts.shape, np.nan)
        np.divide(total, n, out=out, where=n > 0)
        return out, n

    def host_delay(self, host: int, grid: np.ndarray) -> np.ndarray:
        mask = self.rx_dst == host
        t = self.rx_t[mask]
        total, n = self._upto(t, np.cumsum(self.rx_delay[mask]), grid)
        out = np.full(grid.shape, np.nan)
        np.divide(total, n, out=out, where=n > 0)
        return out


@dataclass
class SummaryTable:
    goodput_ratio: float
    avg_e2e_delay: float | None
    last_interval_delay: float | None
    sent_bytes: int
    sent_packets: int
    received_bytes: int
    received_packets: int

    def __post_init__(self) -> None:
        if self.received_bytes > self.sent_bytes or self.received_packets > self.sent_packets:
            raise ValueError("received totals exceed sent totals")


def summarize(records: Sequence[TraceRecord], t_end: float, dt: float = 1.0) -> SummaryTable:
    sent = [r for r in records if r.generated_at <= t_end]
    got = [r for r in sent if r.delivered_at is not None and r.delivered_at <= t_end]
    return SummaryTable(
        goodput_ratio=goodput_ratio(records, t_end),
        avg_e2e_delay=avg_e2e_delay(records, t_end),
        # last complete interval before the end of the run
        last_interval_delay=interval_delay(records, t_end - dt, dt),
        sent_bytes=sum(r.size for r in sent),
        sent_packets=len(sent),
        received_bytes=sum(r.size for r in got),
        received_packets=len(got),
    )


def _num(x: float | None) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


def _time(x: float) -> str:
    return f"{x:.9f}"


def _write(path: Path, header: list[str], rows: Iterable[list[str]]) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def export(result: "ScenarioResult", out_dir: str | Path, dt: float = 1.0) -> list[Path]:
    """Write the metric CSVs for one run and return their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = result.records
    t_end = result.config.sim_end
    series = Series(records)
    grid = np.arange(0.0, math.floor(t_end / dt) * dt + dt / 2, dt)
    paths = []

    p = out / "goodput.csv"
    _write(p, ["t", "goodput_percent"], ([_time(t), _num(g)] for t, g in zip(grid, series.goodput(grid))))
    paths.append(p)

    p = out / "delay_cum.csv"
    _write(p, ["t", "avg_delay_s"], ([_time(t), _num(d)] for t, d in zip(grid, series.cumulative_delay(grid))))
    paths.append(p)

    starts = grid[grid + dt <= t_end + 1e-12]
    means, counts = series.interval_delay(starts, dt)
    p = out / "delay_interval.csv"
    _write(p, ["t", "interval_delay_s", "deliveries"],
           ([_time(t), _num(d), str(int(n))] for t, d, n in zip(starts, means, counts)))
    paths.append(p)

    rows = []
    for host in sorted({int(h) for h in series.rx_dst}):
        for t, d in zip(grid, series.host_delay(host, grid)):
            if not math.isnan(d):
                rows.append([_time(t), str(host), _num(d)])
    p = out / "delay_per_host.csv"
    _write(p, ["t", "host", "avg_delay_s"], rows)
    paths.append(p)

    summary = summarize(records, t_end, dt)
    p = out / "summary.csv"
    _write(p, ["metric", "value"], [
        ["goodput_ratio_percent", _num(summary.goodput_ratio)],
        ["avg_e2e_delay_s", _num(summary.avg_e2e_delay)],
        ["last_interval_delay_s", _num(summary.last_interval_delay)],
        ["total_sent_bytes", str(summary.sent_bytes)],
        ["total_sent_packets", str(summary.sent_packets)],
        ["total_received_bytes", str(summary.received_bytes)],
        ["total_received_packets", str(summary.received_packets)],
    ])
    paths.append(p)

    per_session: dict[int, list[int]] = {}
    for r in records:
        acc = per_session.setdefault(r.session, [0, 0, 0, 0])
        if r.generated_at <= t_end:
            acc[0] += r.size
            acc[1] += 1
            if r.delivered_at is not None and r.delivered_at <= t_end:
                acc[2] += r.size
                acc[3] += 1
    p = out / "sessions.csv"
    rows = []
    for st in result.sessions:
        s = st.session
        sent_b, sent_p, rx_b, rx_p = per_session.get(s.index, [0, 0, 0, 0])
        rows.append([
            str(s.index), str(s.source), str(s.destination), str(s.bytes_total),
            _time(s.start), _time(s.end), str(st.arp_requests), str(st.arp_replies),
            "1" if st.path_discovered else "0", str(sent_b), str(sent_p), str(rx_b), str(rx_p),
        ])
    _write(p, ["session", "source", "destination", "bytes", "start", "end", "arp_requests", "arp_replies",
               "path_discovered", "sent_bytes", "sent_packets", "received_bytes", "received_packets"], rows)
    paths.append(p)
    return paths
